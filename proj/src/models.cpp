#include "ats/models.hpp"

#include <cmath>
#include <string>

namespace ats {

namespace {

constexpr Complex kI{0.0, 1.0};

// log(1 + x) without cancellation for small |x| (Kahan's trick, complex form).
Complex log1p_c(Complex x) {
  const Complex w = 1.0 + x;
  if (w == Complex(1.0, 0.0)) return x;
  return std::log(w) * x / (w - 1.0);
}

// exp(z) - 1 = 2 exp(z/2) sinh(z/2); accurate for small |z|.
Complex expm1_c(Complex z) { return 2.0 * std::exp(0.5 * z) * std::sinh(0.5 * z); }

void require_off_cut(Complex w, const char* what) {
  if (w.imag() == 0.0 && w.real() <= 0.0) {
    throw DomainError(std::string(what) + ": argument on the branch cut (" +
                      std::to_string(w.real()) + ")");
  }
}

// Argument of the Laplace transform inside the normal tempered stable CF.
Complex nts_argument(Complex u, double sigma, double eta) {
  const double var = sigma * sigma;
  return kI * u * (0.5 + eta) * var + u * u * var * 0.5;
}

double nts_drift(double t, double sigma, double k, double eta, double alpha) {
  return -log_laplace(Complex(sigma * sigma * eta, 0.0), t, k, alpha).real();
}

Complex nts_cf(Complex u, double t, double sigma, double k, double eta, double alpha) {
  const double drift = nts_drift(t, sigma, k, eta, alpha);
  return std::exp(log_laplace(nts_argument(u, sigma, eta), t, k, alpha) + kI * u * drift);
}

}  // namespace

TemperedStableSlice::TemperedStableSlice(double t, double alpha, double sigma, double k,
                                         double eta)
    : t_(t), alpha_(alpha), sigma_(sigma), k_(k), eta_(eta) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("slice: t must be > 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("slice: alpha must lie in [0, 1)");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("slice: sigma must be > 0");
  }
  if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("slice: k must be >= 0");
  if (!std::isfinite(eta)) throw std::invalid_argument("slice: eta must be finite");

  // 1 + w k / (1 - alpha) must stay off (-inf, 0] at u = -i (drift) and at the
  // crossing of the pricing contour with the imaginary axis, u = -i/2.
  const double scale = k * sigma * sigma / (1.0 - alpha);
  if (1.0 + scale * eta <= 0.0) {
    throw DomainError("slice: martingale drift undefined (1 + k sigma^2 eta / (1 - alpha) <= 0)");
  }
  if (1.0 + scale * (1.0 + 4.0 * eta) / 8.0 <= 0.0) {
    throw DomainError("slice: pricing contour crosses the branch cut");
  }
}

TemperedStableSlice TemperedStableSlice::with_time(double t) const {
  return TemperedStableSlice(t, alpha_, sigma_, k_, eta_);
}

void SatoParams::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("sato: alpha in [0, 1)");
  if (!(sigma > 0.0)) throw std::invalid_argument("sato: sigma must be > 0");
  if (!(k >= 0.0)) throw std::invalid_argument("sato: k must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("sato: gamma must be >= 0");
  }
}

Complex log_laplace(Complex u, double t, double k, double alpha) {
  if (k < 0.0) throw DomainError("log_laplace: k must be >= 0");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("log_laplace: alpha in [0, 1)");
  if (k == 0.0) return -u * t;

  if (alpha == 0.0) {
    const Complex x = u * k;
    require_off_cut(1.0 + x, "log_laplace");
    return -(t / k) * log1p_c(x);
  }
  const Complex x = u * (k / (1.0 - alpha));
  require_off_cut(1.0 + x, "log_laplace");
  // (1 + x)^alpha - 1; the expm1/log1p form only where cancellation bites.
  const Complex pow_minus_one = std::norm(x) < 0.25 ? expm1_c(alpha * log1p_c(x))
                                                    : std::exp(alpha * std::log(1.0 + x)) - 1.0;
  return -(t / k) * ((1.0 - alpha) / alpha) * pow_minus_one;
}

double martingale_drift(const TemperedStableSlice& s) {
  return nts_drift(s.t(), s.sigma(), s.k(), s.eta(), s.alpha());
}

Complex ats_cf(Complex u, const TemperedStableSlice& s) {
  return nts_cf(u, s.t(), s.sigma(), s.k(), s.eta(), s.alpha());
}

Complex lts_cf(Complex u, double t, const LtsParams& p) {
  return nts_cf(u, t, p.sigma, p.k, p.eta, p.alpha);
}

Complex sato_cf(Complex u, double t, const SatoParams& p) {
  p.validate();
  if (!(t > 0.0)) throw std::invalid_argument("sato_cf: t must be > 0");
  const double scale = std::pow(t, p.gamma);
  const Complex free_part = log_laplace(nts_argument(u * scale, p.sigma, p.eta), 1.0, p.k, p.alpha);
  // E[exp(t^gamma X_1)] with X_1 drift-free: argument at v = -i t^gamma.
  const double var = p.sigma * p.sigma;
  const double at_minus_i = scale * (0.5 + p.eta) * var - scale * scale * var * 0.5;
  const double drift = -log_laplace(Complex(at_minus_i, 0.0), 1.0, p.k, p.alpha).real();
  return std::exp(free_part + kI * u * drift);
}

TemperedStableSlice sato_slice(double t, const SatoParams& p) {
  p.validate();
  const double sigma_t = p.sigma * std::pow(t, p.gamma - 0.5);
  const double eta_t = (0.5 + p.eta) * std::pow(t, -p.gamma) - 0.5;
  return TemperedStableSlice(t, p.alpha, sigma_t, p.k * t, eta_t);
}

TemperedStableSlice lts_slice(double t, const LtsParams& p) {
  return TemperedStableSlice(t, p.alpha, p.sigma, p.k, p.eta);
}

bool check_power_law(const PowerLawParams& p) {
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) return false;
  if (!(p.beta >= 0.0 && p.beta <= 1.0 / (1.0 - p.alpha / 2.0))) return false;
  const double bound =
      p.alpha == 0.0 ? p.beta : std::min(p.beta, (1.0 - p.beta * (1.0 - p.alpha)) / p.alpha);
  return -bound < p.delta && p.delta <= 0.0;
}

TemperedStableSlice power_law_slice(double T, const PowerLawParams& p) {
  if (!(p.sigma_bar > 0.0 && p.k_bar > 0.0 && p.eta_bar > 0.0)) {
    throw std::invalid_argument("power_law_slice: sigma_bar, k_bar, eta_bar must be > 0");
  }
  if (!check_power_law(p)) {
    throw std::invalid_argument("power_law_slice: scaling exponents violate existence bounds");
  }
  if (!(T > 0.0)) throw std::invalid_argument("power_law_slice: T must be > 0");
  return TemperedStableSlice(T, p.alpha, p.sigma_bar, p.k_bar * std::pow(T, p.beta),
                             p.eta_bar * std::pow(T, p.delta));
}

double cumulant(const TemperedStableSlice& s, int order) {
  const double t = s.t();
  const double alpha = s.alpha();
  const double k = s.k();
  const double var = s.variance();
  const double a = (0.5 + s.eta()) * var;  // w'(0); w''(0) = -var

  // m-th derivative of ln L_t at 0: -t prod_{j<m} (alpha - j) (k / (1 - alpha))^(m-1)
  auto psi = [&](int m) {
    double prod = 1.0;
    for (int j = 1; j < m; ++j) prod *= (alpha - j);
    return -t * prod * std::pow(k / (1.0 - alpha), m - 1);
  };

  switch (order) {
    case 1:
      return psi(1) * a + martingale_drift(s);
    case 2:
      return psi(2) * a * a - psi(1) * var;
    case 3:
      return psi(3) * a * a * a - 3.0 * psi(2) * a * var;
    case 4:
      return psi(4) * a * a * a * a - 6.0 * psi(3) * a * a * var + 3.0 * psi(2) * var * var;
    default:
      throw std::invalid_argument("cumulant: order must be in 1..4");
  }
}

double skewness(const TemperedStableSlice& s) {
  return cumulant(s, 3) / std::pow(cumulant(s, 2), 1.5);
}

double excess_kurtosis(const TemperedStableSlice& s) {
  const double c2 = cumulant(s, 2);
  return cumulant(s, 4) / (c2 * c2);
}

double closed_form_nig_skewness(double t, double sigma, double k, double eta) {
  const double e = eta + 0.5;
  const double s2 = sigma * sigma;
  const double num = 3.0 * s2 * s2 * e * k * t + 2.0 * s2 * s2 * s2 * e * e * e * k * k * t;
  const double den = s2 * t + k * t * s2 * s2 * e * e;
  return -num / std::pow(den, 1.5);
}

}  // namespace ats
