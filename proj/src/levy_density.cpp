#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <numbers>

#include "ats/models.hpp"

namespace ats {

namespace {

// e^{z} K_nu(z)
double bessel_k_scaled(double nu, double z) {
  if (!(z > 0.0)) throw DomainError("bessel_k_integral: z must be > 0");
  if (!(nu >= 0.5 && nu < 1.5)) throw DomainError("bessel_k_integral: nu in [1/2, 3/2)");

  // K_nu(z) = e^{-z} / Gamma(nu + 1/2) sqrt(pi / 2z)
  //           * int_0^inf e^{-s} s^{nu - 1/2} (s / 2z + 1)^{nu - 1/2} ds
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  const double p = nu - 0.5;
  auto integrand = [p, z](double s) {
    if (s == 0.0) return p == 0.0 ? 1.0 : 0.0;
    return std::exp(-s + p * (std::log(s) + std::log1p(s / (2.0 * z))));
  };
  const double integral = integrator.integrate(integrand, 1e-13);
  return integral / std::tgamma(nu + 0.5) * std::sqrt(std::numbers::pi / (2.0 * z));
}

}  // namespace

double bessel_k_integral(double nu, double z) { return std::exp(-z) * bessel_k_scaled(nu, z); }

double levy_density(double x, const TemperedStableSlice& s) {
  if (x == 0.0) throw DomainError("levy_density: undefined at x = 0");
  if (!(s.k() > 0.0)) throw DomainError("levy_density: requires k > 0");

  const double alpha = s.alpha();
  const double k = s.k();
  const double var = s.variance();
  const double shift = 0.5 + s.eta();
  const double root_sq = shift * shift + 2.0 * (1.0 - alpha) / (k * var);
  const double prefactor = 2.0 / (std::tgamma(1.0 - alpha) * std::sqrt(2.0 * std::numbers::pi)) *
                           std::pow((1.0 - alpha) / k, 1.0 - alpha) * std::pow(var, alpha) *
                           std::pow(root_sq, alpha / 2.0 + 0.25);
  const double ax = std::abs(x);
  const double z = ax * std::sqrt(root_sq);
  // e^{-shift x} K(z) is formed in one exponent to keep the tails finite.
  const double kz_scaled = bessel_k_scaled(alpha + 0.5, z);
  return s.t() * prefactor / std::pow(ax, 0.5 + alpha) * std::exp(-shift * x - z) * kz_scaled;
}

}  // namespace ats
