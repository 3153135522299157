#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "ats/market.hpp"

using namespace ats;

namespace {

OptionQuote call(double k, double bid, double ask, double t = 0.25) {
  return {t, k, OptionSide::Call, bid, ask};
}
OptionQuote put(double k, double bid, double ask, double t = 0.25) {
  return {t, k, OptionSide::Put, bid, ask};
}

// Five strikes, B = 1. Parity intervals:
//   1700 [1801, 1803]   1750 [1804, 1806.5]   1800 [1804, 1806]
//   1850 [1804.25, 1806.5]   1900 [1804, 1805.5]
// Start at 1800 (mid 1805); 1850 -> [1804.25, 1806] mid 1805.125; 1750 keeps
// it; 1900 -> [1804.25, 1805.5] mid 1804.875; 1700 excludes the mid.
std::vector<OptionQuote> five_strike_chain() {
  return {call(1700, 110, 111),    put(1700, 8, 9),       call(1750, 95, 96.5),
          put(1750, 40, 41),       call(1800, 60, 61),    put(1800, 55, 56),
          call(1850, 32.75, 33.5), put(1850, 77, 78.5),   call(1900, 12, 12.75),
          put(1900, 107.25, 108)};
}

}  // namespace

TEST_SUITE("market") {

TEST_CASE("liquidity filter thresholds") {
  const std::vector<OptionQuote> q{
      call(100, 0.0, 0.2),    // bid = 0
      call(101, 0.04, 0.06),  // mid 0.05 below 10% of the unit step
      call(102, 10.0, 15.0),  // 50% spread kept
      call(103, 10.0, 16.1),  // 61% spread dropped
      call(104, 10.0, 16.0),  // exactly 60% kept
      call(105, 0.1, 0.12)};  // mid 0.11 kept
  const auto out = liquidity_filter(q, 1.0);
  REQUIRE(out.size() == 3);
  CHECK(out[0].strike == 102);
  CHECK(out[1].strike == 104);
  CHECK(out[2].strike == 105);
}

TEST_CASE("liquidity filter is idempotent") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<OptionQuote> q;
  for (int i = 0; i < 500; ++i) {
    const double bid = u(rng) < 0.3 ? 0.0 : u(rng);
    q.push_back(call(50.0 + i, bid, bid + u(rng)));
  }
  const auto once = liquidity_filter(q, 5.0);
  const auto twice = liquidity_filter(once, 5.0);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].strike == twice[i].strike);
}

TEST_CASE("strike step") {
  const std::vector<OptionQuote> q{call(100, 1, 2), put(100, 1, 2), call(97.5, 1, 2), call(105, 1, 2)};
  CHECK(min_strike_step(q) == 2.5);
  CHECK(min_strike_step(std::vector<OptionQuote>{call(100, 1, 2)}) == 0.0);
}

TEST_CASE("discount curve interpolation") {
  const DiscountCurve c({{2.0, 0.8}, {1.0, 0.9}});
  CHECK(discount_factor(c, 0.0) == 1.0);
  CHECK(discount_factor(c, 1.0) == 0.9);
  CHECK(discount_factor(c, 2.0) == 0.8);
  CHECK(discount_factor(c, 1.5) == doctest::Approx(std::sqrt(0.72)).epsilon(1e-15));
  CHECK(discount_factor(c, 0.5) == doctest::Approx(std::sqrt(0.9)).epsilon(1e-15));
  CHECK_THROWS_AS(discount_factor(c, 2.1), std::out_of_range);
  CHECK_THROWS_AS(discount_factor(c, -0.1), std::out_of_range);
  CHECK_THROWS_AS(DiscountCurve({{1.0, 0.9}, {2.0, 0.95}}), InputError);
  CHECK_THROWS_AS(DiscountCurve({{1.0, 1.1}}), InputError);
  CHECK_THROWS_AS(DiscountCurve({{1.0, 0.9}, {1.0, 0.9}}), InputError);
}

TEST_CASE("parity forward") {
  // zero spread: C = P + B (F - K)
  const double b = 0.97, f = 103.0, k = 100.0, p = 4.0;
  const auto z = parity_forward(call(k, p + b * (f - k), p + b * (f - k)), put(k, p, p), b);
  CHECK(z.bid == doctest::Approx(f).epsilon(1e-15));
  CHECK(z.ask == doctest::Approx(f).epsilon(1e-15));

  // hand arithmetic: (10.2 - 4.4) / 0.98 + 100 and (10.6 - 4.1) / 0.98 + 100
  const auto w = parity_forward(call(100, 10.2, 10.6), put(100, 4.1, 4.4), 0.98);
  CHECK(w.bid == doctest::Approx(105.91836734693878).epsilon(1e-14));
  CHECK(w.ask == doctest::Approx(106.63265306122449).epsilon(1e-14));
  CHECK(w.mid == doctest::Approx(106.27551020408163).epsilon(1e-14));

  const auto wider = parity_forward(call(100, 10.1, 10.6), put(100, 4.1, 4.6), 0.98);
  CHECK(wider.bid < w.bid);
  CHECK(wider.ask >= w.ask);
  CHECK_THROWS_AS(parity_forward(call(100, 1, 2), put(105, 1, 2), 1.0), std::invalid_argument);
}

TEST_CASE("synthetic forward: single strike") {
  const std::vector<OptionQuote> q{call(100, 5.0, 5.5), put(100, 3.0, 3.25)};
  const auto f = synthetic_forward(q, 0.99, 100.0);
  const auto p = parity_forward(q[0], q[1], 0.99);
  CHECK(f.fwd_bid == p.bid);
  CHECK(f.fwd_ask == p.ask);
  CHECK(f.fwd_mid == p.mid);
  CHECK(f.discarded_strikes.empty());
}

TEST_CASE("synthetic forward: outer strike discarded") {
  const auto q = five_strike_chain();
  const auto f = synthetic_forward(q, 1.0, 1805.0);
  CHECK(f.fwd_bid == 1804.25);
  CHECK(f.fwd_ask == 1805.5);
  CHECK(f.fwd_mid == 1804.875);
  CHECK(f.used_strikes == std::vector<double>{1800, 1850, 1750, 1900});
  CHECK(f.discarded_strikes == std::vector<double>{1700});
}

TEST_CASE("synthetic forward: consistent zero-spread chain") {
  const double b = 0.95, fwd = 101.3;
  std::vector<OptionQuote> q;
  for (double k = 80; k <= 120; k += 5) {
    const double p = 2.0 + 0.1 * k;
    q.push_back(call(k, p + b * (fwd - k), p + b * (fwd - k)));
    q.push_back(put(k, p, p));
  }
  const auto f = synthetic_forward(q, b, 100.0);
  CHECK(f.fwd_mid == doctest::Approx(fwd).epsilon(1e-14));
  CHECK(f.discarded_strikes.empty());
  CHECK(f.used_strikes.size() == 9);
}

TEST_CASE("synthetic forward: tie-breaking and visiting order") {
  std::vector<OptionQuote> q;
  for (double k : {90.0, 95.0, 100.0, 105.0}) {
    q.push_back(call(k, 10.0 + (100 - k), 11.0 + (100 - k)));
    q.push_back(put(k, 10.0, 11.0));
  }
  // anchor halfway between 95 and 100 starts at the lower strike
  const auto f = synthetic_forward(q, 1.0, 97.5);
  CHECK(f.used_strikes == std::vector<double>{95, 100, 90, 105});
  CHECK(synthetic_forward(q, 1.0, 97.5).fwd_mid == f.fwd_mid);
}

TEST_CASE("synthetic forward: errors") {
  CHECK_THROWS_AS(synthetic_forward(std::vector<OptionQuote>{call(100, 1, 2)}, 1.0, 100.0),
                  NoValidStrikeError);
  CHECK_THROWS_AS(synthetic_forward(std::vector<OptionQuote>{call(100, 1, 2), call(100, 1, 2)}, 1.0, 100.0),
                  InputError);
}

TEST_CASE("synthetic forward: consensus interval properties on noisy chains") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_real_distribution<double> spread(0.05, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double b = 0.97, fwd = 100.0 + noise(rng);
    std::vector<OptionQuote> q;
    for (double k = 70; k <= 130; k += 2.5) {
      const double p = 2.0 + std::max(k - 100.0, 0.0);
      const double c = p + b * (fwd - k) + noise(rng);
      const double sc = spread(rng), sp = spread(rng);
      q.push_back(call(k, c, c + sc));
      q.push_back(put(k, p, p + sp));
    }
    const auto f = synthetic_forward(q, b, 100.0);
    CHECK(f.fwd_bid <= f.fwd_ask);
    CHECK(f.fwd_mid == 0.5 * (f.fwd_bid + f.fwd_ask));
    CHECK(f.used_strikes.size() + f.discarded_strikes.size() == 25);
    for (double k : f.used_strikes) {
      const auto it = std::find_if(q.begin(), q.end(), [k](const OptionQuote& x) { return x.strike == k; });
      const auto p = parity_forward(*it, *(it + 1), b);
      CHECK(p.bid <= f.fwd_bid);
      CHECK(f.fwd_ask <= p.ask);
    }
  }
}

TEST_CASE("moneyness") {
  CHECK(moneyness(100, 100) == 0.0);
  CHECK(moneyness(100 * std::exp(1.0), 100) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(moneyness(95, 100) == doctest::Approx(-0.051293294387550533).epsilon(1e-14));
  CHECK_THROWS_AS(moneyness(0, 100), std::invalid_argument);
}

TEST_CASE("build_market anchors each expiry on the previous forward") {
  std::istringstream chain(
      "expiry_yf,strike,side,bid,ask\n"
      "0.25,1800,C,60,61\n0.25,1800,P,55,56\n"
      "1,1750,C,113.25,114.75\n1,1750,P,60,61.5\n"
      "1,1800,C,90,91.5\n1,1800,P,75,76.5\n"
      "1,1850,C,63,64.5\n1,1850,P,96,97.5\n"
      "2,1800,C,0,1\n2,1800,P,0,1\n");
  std::istringstream curve("tenor_yf,discount_factor\n0.25,1\n1,0.75\n2,0.6\n");
  const auto m = build_market(read_chain(chain), read_curve(curve), 1700.0);
  REQUIRE(m.expiries.size() == 2);
  CHECK(m.expiries[0].forward.fwd_mid == 1805.0);
  CHECK(m.expiries[1].discount == 0.75);
  CHECK(m.expiries[1].forward.fwd_mid == 1820.5);
  CHECK(m.skipped_expiries == std::vector<double>{2.0});
}

TEST_CASE("CSV readers") {
  std::istringstream ok(
      "\xEF\xBB\xBF# comment\nexpiry_yf,strike,side,bid,ask\n\n0.5, 100 ,P,1.5,1.75\n");
  const auto q = read_chain(ok);
  REQUIRE(q.size() == 1);
  CHECK(q[0].side == OptionSide::Put);
  CHECK(q[0].strike == 100.0);

  std::istringstream empty("");
  CHECK_THROWS_AS(read_chain(empty), EmptyInputError);
  std::istringstream header_only("expiry_yf,strike,side,bid,ask\n");
  CHECK_THROWS_AS(read_chain(header_only), EmptyInputError);
  std::istringstream bad_header("T,K,side,bid,ask\n0.5,100,C,1,2\n");
  CHECK_THROWS_AS(read_chain(bad_header), InputError);
  std::istringstream bad_side("expiry_yf,strike,side,bid,ask\n0.5,100,X,1,2\n");
  CHECK_THROWS_AS(read_chain(bad_side), InputError);
  std::istringstream crossed("expiry_yf,strike,side,bid,ask\n0.5,100,C,2,1\n");
  CHECK_THROWS_AS(read_chain(crossed), InputError);
  std::istringstream garbage("expiry_yf,strike,side,bid,ask\n0.5,100x,C,1,2\n");
  CHECK_THROWS_AS(read_chain(garbage), InputError);
  CHECK_THROWS_AS(read_chain_file("/nonexistent/chain.csv"), MissingFileError);

  std::istringstream curve("tenor_yf,discount_factor\n1,0.9\n0.5,0.95\n");
  const auto c = read_curve(curve);
  CHECK(c.pillars().front().first == 0.5);
}

TEST_CASE("chain round trip through CSV") {
  const auto q = five_strike_chain();
  std::ostringstream out;
  write_chain(out, q);
  std::istringstream in(out.str());
  const auto back = read_chain(in);
  REQUIRE(back.size() == q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    CHECK(back[i].strike == q[i].strike);
    CHECK(back[i].bid == q[i].bid);
    CHECK(back[i].ask == q[i].ask);
    CHECK(back[i].side == q[i].side);
  }
}

}  // TEST_SUITE
