#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ats/pricing.hpp"

namespace ats {

/// Malformed input data (bad CSV row, inconsistent quote, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No strike at an expiry carries both a call and a put after filtering.
class NoValidStrikeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptionQuote {
  double expiry = 0.0;
  double strike = 0.0;
  OptionSide side = OptionSide::Call;
  double bid = 0.0;
  double ask = 0.0;

  double mid() const { return 0.5 * (bid + ask); }
  /// Throws InputError unless ask >= bid >= 0, strike > 0, expiry > 0.
  void validate() const;
};

class DiscountCurve {
 public:
  DiscountCurve() = default;
  /// Pillars (tenor, factor); sorted by tenor on construction. Throws
  /// InputError on non-positive tenors, duplicate tenors, factors outside
  /// (0, 1] or factors increasing with tenor.
  explicit DiscountCurve(std::vector<std::pair<double, double>> pillars);

  const std::vector<std::pair<double, double>>& pillars() const { return pillars_; }
  double last_tenor() const { return pillars_.empty() ? 0.0 : pillars_.back().first; }

 private:
  std::vector<std::pair<double, double>> pillars_;
};

struct ParityForward {
  double bid = 0.0;
  double ask = 0.0;
  double mid = 0.0;
};

struct SyntheticForward {
  double expiry = 0.0;
  double fwd_bid = 0.0;
  double fwd_ask = 0.0;
  double fwd_mid = 0.0;
  std::vector<double> used_strikes;
  std::vector<double> discarded_strikes;
};

/// Drops penny options (mid < 0.1 * strike_step), quotes with bid = 0 and
/// quotes whose relative spread (ask - bid) / bid exceeds 0.6.
std::vector<OptionQuote> liquidity_filter(std::span<const OptionQuote> quotes, double strike_step);

/// Smallest positive gap between distinct strikes; 0 with fewer than two strikes.
double min_strike_step(std::span<const OptionQuote> quotes);

/// Log-linear interpolation with an implicit (0, 1) pillar. Throws
/// std::out_of_range beyond the last pillar or for T < 0.
double discount_factor(const DiscountCurve& curve, double T);

ParityForward parity_forward(const OptionQuote& call, const OptionQuote& put, double discount);

/// Consensus forward of one expiry: starts from the strike nearest the
/// anchor and alternately absorbs the next higher and next lower strike,
/// keeping the running mid inside every accepted parity interval.
SyntheticForward synthetic_forward(std::span<const OptionQuote> quotes, double discount,
                                   double anchor);

double moneyness(double strike, double forward);

/// Filtered quotes of one expiry with its discount factor and forward.
struct ExpiryData {
  double expiry = 0.0;
  double discount = 1.0;
  SyntheticForward forward;
  std::vector<OptionQuote> quotes;
};

struct MarketData {
  std::vector<ExpiryData> expiries;       // increasing expiry
  std::vector<double> skipped_expiries;   // no call/put pair survived the filter
};

/// Filter every expiry with its own strike step, then build forwards in
/// increasing expiry, anchoring the first at spot and each later one at the
/// previous forward mid.
MarketData build_market(std::span<const OptionQuote> quotes, const DiscountCurve& curve,
                        double spot);

// CSV I/O ----------------------------------------------------------------------

/// Header `expiry_yf,strike,side,bid,ask`, side C or P.
std::vector<OptionQuote> read_chain(std::istream& in);
std::vector<OptionQuote> read_chain_file(const std::string& path);

/// Header `tenor_yf,discount_factor`.
DiscountCurve read_curve(std::istream& in);
DiscountCurve read_curve_file(const std::string& path);

void write_chain(std::ostream& out, std::span<const OptionQuote> quotes);
void write_curve(std::ostream& out, const DiscountCurve& curve);

/// `expiry_yf,fwd_bid,fwd_ask,fwd_mid,n_used,n_discarded`
void write_forwards(std::ostream& out, std::span<const ExpiryData> expiries);

}  // namespace ats
