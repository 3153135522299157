#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "ats/models.hpp"

using namespace ats;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return t;
}

bool has(const ConditionReport& r, const std::string& id) {
  for (const auto& v : r.violations()) {
    if (v.condition == id) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("conditions") {

TEST_CASE("constant parameters are valid") {
  for (double a : {0.0, 0.5, 0.75}) {
    std::vector<TemperedStableSlice> s;
    for (double t : log_grid(0.01, 5.0, 40)) s.emplace_back(t, a, 0.2, 0.8, 1.5);
    const auto r = check_existence(s);
    CHECK(r.valid());
    CHECK(r.limit_proxy_checked());
  }
}

TEST_CASE("power-law grid with admissible exponents is valid") {
  std::vector<TemperedStableSlice> s;
  for (double t : log_grid(0.02, 3.0, 30)) s.push_back(power_law_slice(t, PowerLawParams{}));
  CHECK(check_existence(s).valid());
}

TEST_CASE("beta = 2 at alpha = 1/2 breaks g3") {
  std::vector<TemperedStableSlice> s;
  for (double t : log_grid(0.05, 2.0, 20)) s.emplace_back(t, 0.5, 0.2, t * t, 1.0);
  const auto r = check_existence(s);
  CHECK_FALSE(r.valid());
  CHECK(has(r, "g3"));

  // brute-force sign of the g3 finite differences agrees
  bool any_decrease = false;
  for (std::size_t i = 1; i < s.size(); ++i) {
    // g3 at alpha = 1/2: t^2 sigma^2 root / k
    const auto g = [](const TemperedStableSlice& x) {
      const double shift = 0.5 + x.eta();
      const double root = std::sqrt(shift * shift + 1.0 / (x.variance() * x.k()));
      return x.t() * x.t() * x.variance() * root / x.k();
    };
    if (g(s[i]) < g(s[i - 1])) any_decrease = true;
  }
  CHECK(any_decrease);
}

TEST_CASE("decreasing k breaks g1 and g2") {
  std::vector<TemperedStableSlice> s;
  for (double t : log_grid(0.1, 1.0, 5)) s.emplace_back(t, 0.5, 0.2, 1.0 / t, 0.0);
  const auto r = check_existence(s);
  CHECK(has(r, "g1"));
  CHECK(has(r, "g2"));
  CHECK(r.valid() == r.violations().empty());
}

TEST_CASE("limit proxy") {
  // eta_t growing like t^-2 makes t sigma^2 eta blow up at 0
  std::vector<TemperedStableSlice> s;
  for (double t : {0.1, 0.2, 0.4}) s.emplace_back(t, 0.0, 0.2, 1.0, 1.0 / (t * t));
  CHECK(has(check_existence(s), "limit_proxy_drift"));

  std::vector<TemperedStableSlice> single{TemperedStableSlice(0.5, 0.5, 0.2, 1.0, 0.0)};
  const auto r = check_existence(single);
  CHECK(r.valid());
  CHECK_FALSE(r.limit_proxy_checked());
}

TEST_CASE("grid noise allowance") {
  CHECK_FALSE(decreased(1.0, 1.0 - 1e-11));
  CHECK(decreased(1.0, 1.0 - 1e-9));
  CHECK_FALSE(decreased(-INFINITY, -INFINITY));
  CHECK(decreased(0.0, -INFINITY));
}

TEST_CASE("unordered grid is rejected") {
  std::vector<TemperedStableSlice> s{TemperedStableSlice(1.0, 0.5, 0.2, 1.0, 0.0),
                                     TemperedStableSlice(0.5, 0.5, 0.2, 1.0, 0.0)};
  CHECK_THROWS_AS(check_existence(s), std::invalid_argument);
}

TEST_CASE("admissible power laws always pass the checker") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int sampled = 0;
  while (sampled < 300) {
    PowerLawParams p;
    p.alpha = 0.95 * u(rng);
    p.beta = u(rng) / (1.0 - p.alpha / 2.0);
    p.delta = -1.5 * u(rng);
    p.k_bar = std::exp(4.0 * (u(rng) - 0.5));
    p.eta_bar = std::exp(4.0 * (u(rng) - 0.5));
    p.sigma_bar = 0.1 + 0.3 * u(rng);
    if (!check_power_law(p)) continue;
    ++sampled;
    std::vector<TemperedStableSlice> s;
    for (double t : log_grid(0.01, 10.0, 50)) s.push_back(power_law_slice(t, p));
    const auto r = check_existence(s);
    CAPTURE(p.alpha);
    CAPTURE(p.beta);
    CAPTURE(p.delta);
    CHECK(r.valid());
  }
}

}  // TEST_SUITE
