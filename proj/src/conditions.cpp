#include <cmath>
#include <limits>
#include <sstream>

#include "ats/models.hpp"

namespace ats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGridNoise = 1e-10;

std::string describe(const char* name, double prev_t, double prev, double t, double next) {
  std::ostringstream os;
  os.precision(12);
  os << name << " decreases from " << prev << " at t=" << prev_t << " to " << next
     << " at t=" << t;
  return os.str();
}

// Local log-log slope of q between two grid times; +inf when q is already 0.
double log_slope(double q0, double t0, double q1, double t1) {
  if (q0 == 0.0) return kInf;
  if (!std::isfinite(q0) || q1 == 0.0) return -kInf;
  return (std::log(q1) - std::log(q0)) / (std::log(t1) - std::log(t0));
}

// t sigma^2 |eta|
double drift_scale(const TemperedStableSlice& s) {
  return s.t() * s.variance() * std::abs(s.eta());
}

// t sigma^(2 alpha) |eta|^alpha / k^(1 - alpha)
double jump_scale(const TemperedStableSlice& s) {
  if (s.k() == 0.0) return kInf;
  const double a = s.alpha();
  const double eta_part = a == 0.0 ? 1.0 : std::pow(std::abs(s.eta()), a);
  return s.t() * std::pow(s.variance(), a) * eta_part / std::pow(s.k(), 1.0 - a);
}

}  // namespace

MonotonicityValues monotonicity_values(const TemperedStableSlice& s) {
  if (s.k() == 0.0) return {-kInf, -kInf, kInf};

  const double a = s.alpha();
  const double shift = 0.5 + s.eta();
  const double b = 2.0 * (1.0 - a) / (s.variance() * s.k());
  const double root = std::sqrt(shift * shift + b);

  // shift -/+ root written without cancellation
  const double g1 = shift >= 0.0 ? -b / (shift + root) : shift - root;
  const double g2 = shift >= 0.0 ? -(shift + root) : -b / (root - shift);
  const double h3 = a == 0.0 ? std::log(s.t()) - std::log(s.k())
                             : std::log(s.t()) - (1.0 - a) * std::log(s.k()) +
                                   a * std::log(s.variance()) + a * std::log(root);
  return {g1, g2, h3};
}

bool decreased(double prev, double next) {
  if (std::isinf(prev) || std::isinf(next)) {
    if (prev == next) return false;
    return next < prev;
  }
  return prev - next > kGridNoise * (1.0 + std::abs(prev));
}

ConditionReport check_existence(std::span<const TemperedStableSlice> slices) {
  ConditionReport report;
  for (std::size_t i = 1; i < slices.size(); ++i) {
    if (!(slices[i].t() > slices[i - 1].t())) {
      throw std::invalid_argument("check_existence: slices must be strictly increasing in t");
    }
  }

  for (std::size_t i = 1; i < slices.size(); ++i) {
    const auto& lo = slices[i - 1];
    const auto& hi = slices[i];
    const auto prev = monotonicity_values(lo);
    const auto next = monotonicity_values(hi);
    if (decreased(prev.g1, next.g1)) {
      report.add({"g1", hi.t(), describe("g1", lo.t(), prev.g1, hi.t(), next.g1)});
    }
    if (decreased(prev.g2, next.g2)) {
      report.add({"g2", hi.t(), describe("g2", lo.t(), prev.g2, hi.t(), next.g2)});
    }
    if (decreased(prev.h3, next.h3)) {
      report.add({"g3", hi.t(), describe("alpha*ln g3", lo.t(), prev.h3, hi.t(), next.h3)});
    }
  }

  // t -> 0 limits, assessed by power-law extrapolation from the two earliest
  // grid times: the quantity vanishes at 0 when its log-log slope is positive.
  if (slices.size() >= 2) {
    report.set_limit_proxy_checked(true);
    const auto& s0 = slices[0];
    const auto& s1 = slices[1];
    const double drift_slope = log_slope(drift_scale(s0), s0.t(), drift_scale(s1), s1.t());
    if (!(drift_slope > 0.0)) {
      std::ostringstream os;
      os << "limit proxy: t sigma^2 eta has log-log slope " << drift_slope << " near t=0";
      report.add({"limit_proxy_drift", s0.t(), os.str()});
    }
    const double jump_slope = log_slope(jump_scale(s0), s0.t(), jump_scale(s1), s1.t());
    if (!(jump_slope > 0.0)) {
      std::ostringstream os;
      os << "limit proxy: t sigma^(2a) eta^a / k^(1-a) has log-log slope " << jump_slope
         << " near t=0";
      report.add({"limit_proxy_jump", s0.t(), os.str()});
    }
  }
  return report;
}

}  // namespace ats
