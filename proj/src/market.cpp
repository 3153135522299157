#include "ats/market.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include "ats/format.hpp"

namespace ats {

namespace {

constexpr double kPennyFraction = 0.10;
constexpr double kMaxRelativeSpread = 0.60;

std::string row_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

double field_number(std::string_view f, std::size_t line_no, const char* name) {
  const auto v = parse_number(f);
  if (!v || !std::isfinite(*v)) {
    throw InputError(row_error(line_no, std::string("bad ") + name + " '" + std::string(f) + "'"));
  }
  return *v;
}

// Returns false at end of input; skips blank lines and '#' comment lines and
// strips a UTF-8 BOM.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto t = trim(line);
    if (!t.empty() && t.front() != '#') return true;
  }
  return false;
}

void expect_header(std::istream& in, std::size_t& line_no, std::string_view header) {
  std::string line;
  if (!next_line(in, line, line_no)) throw EmptyInputError("no quotes: input is empty");
  if (trim(line) != header) {
    throw InputError(row_error(line_no, "expected header '" + std::string(header) + "'"));
  }
}

std::ifstream open_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingFileError("cannot open '" + path + "'");
  return f;
}

struct StrikePair {
  const OptionQuote* call = nullptr;
  const OptionQuote* put = nullptr;
};

}  // namespace

void OptionQuote::validate() const {
  if (!(expiry > 0.0) || !std::isfinite(expiry)) throw InputError("quote: expiry must be > 0");
  if (!(strike > 0.0) || !std::isfinite(strike)) throw InputError("quote: strike must be > 0");
  if (!(bid >= 0.0) || !std::isfinite(bid)) throw InputError("quote: bid must be >= 0");
  if (!(ask >= bid) || !std::isfinite(ask)) throw InputError("quote: ask must be >= bid");
}

DiscountCurve::DiscountCurve(std::vector<std::pair<double, double>> pillars)
    : pillars_(std::move(pillars)) {
  std::sort(pillars_.begin(), pillars_.end());
  double prev_t = 0.0;
  double prev_b = 1.0;
  for (const auto& [t, b] : pillars_) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InputError("curve: tenors must be > 0");
    if (t == prev_t) throw InputError("curve: duplicate tenor");
    if (!(b > 0.0 && b <= 1.0)) throw InputError("curve: discount factors must lie in (0, 1]");
    if (b > prev_b) throw InputError("curve: discount factors must be non-increasing");
    prev_t = t;
    prev_b = b;
  }
}

std::vector<OptionQuote> liquidity_filter(std::span<const OptionQuote> quotes, double strike_step) {
  std::vector<OptionQuote> out;
  out.reserve(quotes.size());
  for (const auto& q : quotes) {
    if (q.mid() < kPennyFraction * strike_step) continue;
    if (q.bid == 0.0) continue;
    if ((q.ask - q.bid) / q.bid > kMaxRelativeSpread) continue;
    out.push_back(q);
  }
  return out;
}

double min_strike_step(std::span<const OptionQuote> quotes) {
  std::vector<double> strikes;
  strikes.reserve(quotes.size());
  for (const auto& q : quotes) strikes.push_back(q.strike);
  std::sort(strikes.begin(), strikes.end());
  strikes.erase(std::unique(strikes.begin(), strikes.end()), strikes.end());
  double step = 0.0;
  for (std::size_t i = 1; i < strikes.size(); ++i) {
    const double d = strikes[i] - strikes[i - 1];
    if (step == 0.0 || d < step) step = d;
  }
  return step;
}

double discount_factor(const DiscountCurve& curve, double T) {
  if (!(T >= 0.0)) throw std::out_of_range("discount_factor: negative tenor");
  if (T == 0.0) return 1.0;
  const auto& p = curve.pillars();
  if (p.empty() || T > p.back().first) {
    throw std::out_of_range("discount_factor: tenor " + format_number(T) +
                            " beyond the last curve pillar");
  }
  double t0 = 0.0;
  double b0 = 1.0;
  for (const auto& [t1, b1] : p) {
    if (T == t1) return b1;
    if (T < t1) {
      const double w = (T - t0) / (t1 - t0);
      return std::exp((1.0 - w) * std::log(b0) + w * std::log(b1));
    }
    t0 = t1;
    b0 = b1;
  }
  return p.back().second;
}

ParityForward parity_forward(const OptionQuote& call, const OptionQuote& put, double discount) {
  if (call.side != OptionSide::Call || put.side != OptionSide::Put) {
    throw std::invalid_argument("parity_forward: need one call and one put");
  }
  if (call.strike != put.strike || call.expiry != put.expiry) {
    throw std::invalid_argument("parity_forward: call and put must share strike and expiry");
  }
  if (!(discount > 0.0)) throw std::invalid_argument("parity_forward: discount must be > 0");
  ParityForward f;
  f.bid = (call.bid - put.ask) / discount + call.strike;
  f.ask = (call.ask - put.bid) / discount + call.strike;
  f.mid = 0.5 * (f.bid + f.ask);
  return f;
}

SyntheticForward synthetic_forward(std::span<const OptionQuote> quotes, double discount,
                                   double anchor) {
  std::map<double, StrikePair> by_strike;
  double expiry = 0.0;
  for (const auto& q : quotes) {
    auto& pair = by_strike[q.strike];
    const OptionQuote*& slot = q.side == OptionSide::Call ? pair.call : pair.put;
    if (slot != nullptr) {
      throw InputError("synthetic_forward: duplicate quote at strike " + format_number(q.strike));
    }
    slot = &q;
    expiry = q.expiry;
  }
  std::vector<std::pair<double, ParityForward>> grid;
  for (const auto& [k, pair] : by_strike) {
    if (pair.call && pair.put) grid.emplace_back(k, parity_forward(*pair.call, *pair.put, discount));
  }
  if (grid.empty()) {
    throw NoValidStrikeError("synthetic_forward: no strike with both a call and a put");
  }

  // Nearest strike to the anchor; ties go to the lower strike.
  std::size_t start = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (std::abs(grid[i].first - anchor) < std::abs(grid[start].first - anchor)) start = i;
  }

  SyntheticForward out;
  out.expiry = expiry;
  out.fwd_bid = grid[start].second.bid;
  out.fwd_ask = grid[start].second.ask;
  out.fwd_mid = grid[start].second.mid;
  out.used_strikes.push_back(grid[start].first);

  auto visit = [&](std::size_t i) {
    const auto& [k, f] = grid[i];
    if (f.bid <= out.fwd_mid && out.fwd_mid <= f.ask) {
      out.fwd_bid = std::max(out.fwd_bid, f.bid);
      out.fwd_ask = std::min(out.fwd_ask, f.ask);
      out.fwd_mid = 0.5 * (out.fwd_bid + out.fwd_ask);
      out.used_strikes.push_back(k);
    } else {
      out.discarded_strikes.push_back(k);
    }
  };

  std::size_t up = start + 1;
  std::ptrdiff_t down = static_cast<std::ptrdiff_t>(start) - 1;
  while (up < grid.size() || down >= 0) {
    if (up < grid.size()) visit(up++);
    if (down >= 0) visit(static_cast<std::size_t>(down--));
  }
  return out;
}

double moneyness(double strike, double forward) {
  if (!(strike > 0.0) || !(forward > 0.0)) {
    throw std::invalid_argument("moneyness: strike and forward must be > 0");
  }
  return std::log(strike / forward);
}

MarketData build_market(std::span<const OptionQuote> quotes, const DiscountCurve& curve,
                        double spot) {
  if (quotes.empty()) throw EmptyInputError("no quotes");
  if (!(spot > 0.0)) throw std::invalid_argument("build_market: spot must be > 0");

  std::map<double, std::vector<OptionQuote>> by_expiry;
  for (const auto& q : quotes) {
    q.validate();
    by_expiry[q.expiry].push_back(q);
  }

  MarketData data;
  double anchor = spot;
  for (auto& [expiry, raw] : by_expiry) {
    std::stable_sort(raw.begin(), raw.end(), [](const OptionQuote& a, const OptionQuote& b) {
      if (a.strike != b.strike) return a.strike < b.strike;
      return a.side == OptionSide::Call && b.side == OptionSide::Put;
    });
    ExpiryData e;
    e.expiry = expiry;
    e.discount = discount_factor(curve, expiry);
    e.quotes = liquidity_filter(raw, min_strike_step(raw));
    try {
      e.forward = synthetic_forward(e.quotes, e.discount, anchor);
    } catch (const NoValidStrikeError&) {
      data.skipped_expiries.push_back(expiry);
      continue;
    }
    anchor = e.forward.fwd_mid;
    data.expiries.push_back(std::move(e));
  }
  return data;
}

std::vector<OptionQuote> read_chain(std::istream& in) {
  std::size_t line_no = 0;
  expect_header(in, line_no, "expiry_yf,strike,side,bid,ask");
  std::vector<OptionQuote> out;
  std::string line;
  while (next_line(in, line, line_no)) {
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw InputError(row_error(line_no, "expected 5 fields"));
    OptionQuote q;
    q.expiry = field_number(f[0], line_no, "expiry_yf");
    q.strike = field_number(f[1], line_no, "strike");
    if (f[2] == "C" || f[2] == "c") {
      q.side = OptionSide::Call;
    } else if (f[2] == "P" || f[2] == "p") {
      q.side = OptionSide::Put;
    } else {
      throw InputError(row_error(line_no, "side must be C or P"));
    }
    q.bid = field_number(f[3], line_no, "bid");
    q.ask = field_number(f[4], line_no, "ask");
    try {
      q.validate();
    } catch (const InputError& e) {
      throw InputError(row_error(line_no, e.what()));
    }
    out.push_back(q);
  }
  if (out.empty()) throw EmptyInputError("no quotes");
  return out;
}

std::vector<OptionQuote> read_chain_file(const std::string& path) {
  auto f = open_file(path);
  return read_chain(f);
}

DiscountCurve read_curve(std::istream& in) {
  std::size_t line_no = 0;
  expect_header(in, line_no, "tenor_yf,discount_factor");
  std::vector<std::pair<double, double>> pillars;
  std::string line;
  while (next_line(in, line, line_no)) {
    const auto f = split_csv_line(line);
    if (f.size() != 2) throw InputError(row_error(line_no, "expected 2 fields"));
    pillars.emplace_back(field_number(f[0], line_no, "tenor_yf"),
                         field_number(f[1], line_no, "discount_factor"));
  }
  if (pillars.empty()) throw EmptyInputError("discount curve has no pillars");
  return DiscountCurve(std::move(pillars));
}

DiscountCurve read_curve_file(const std::string& path) {
  auto f = open_file(path);
  return read_curve(f);
}

void write_chain(std::ostream& out, std::span<const OptionQuote> quotes) {
  out << "expiry_yf,strike,side,bid,ask\n";
  for (const auto& q : quotes) {
    out << format_number(q.expiry) << ',' << format_number(q.strike) << ','
        << (q.side == OptionSide::Call ? 'C' : 'P') << ',' << format_number(q.bid) << ','
        << format_number(q.ask) << '\n';
  }
}

void write_curve(std::ostream& out, const DiscountCurve& curve) {
  out << "tenor_yf,discount_factor\n";
  for (const auto& [t, b] : curve.pillars()) {
    out << format_number(t) << ',' << format_number(b) << '\n';
  }
}

void write_forwards(std::ostream& out, std::span<const ExpiryData> expiries) {
  out << "expiry_yf,fwd_bid,fwd_ask,fwd_mid,n_used,n_discarded\n";
  for (const auto& e : expiries) {
    const auto& f = e.forward;
    out << format_number(e.expiry) << ',' << format_number(f.fwd_bid) << ','
        << format_number(f.fwd_ask) << ',' << format_number(f.fwd_mid) << ','
        << f.used_strikes.size() << ',' << f.discarded_strikes.size() << '\n';
  }
}

}  // namespace ats
