#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ats {

using Complex = std::complex<double>;

/// Raised when a transform is evaluated off its domain (branch cut, k <= 0 where
/// the formula needs k > 0, x = 0 for the Levy density, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Marginal law of an additive normal tempered stable process at one maturity.
///
/// Holds the time-dependent triple (sigma_t, k_t, eta_t) together with the
/// stability index and the maturity. Construction rejects parameter sets whose
/// Laplace-transform argument would touch the branch cut of the fractional
/// power on the pricing contour Im(u) = -1/2 or at the martingale point u = -i.
class TemperedStableSlice {
 public:
  TemperedStableSlice(double t, double alpha, double sigma, double k, double eta);

  double t() const { return t_; }
  double alpha() const { return alpha_; }
  double sigma() const { return sigma_; }
  double k() const { return k_; }
  double eta() const { return eta_; }
  double variance() const { return sigma_ * sigma_; }

  /// Same law at the same time, different maturity label.
  TemperedStableSlice with_time(double t) const;

 private:
  double t_;
  double alpha_;
  double sigma_;
  double k_;
  double eta_;
};

/// Time-constant parameters of a Levy normal tempered stable process.
struct LtsParams {
  double sigma = 0.2;
  double k = 1.0;
  double eta = 0.0;
  double alpha = 0.5;
};

/// Self-similar (Sato) extension of the unit-time LTS law: X_t =d t^gamma X_1.
struct SatoParams {
  double alpha = 0.5;
  double sigma = 0.2;
  double k = 1.0;
  double eta = 0.0;
  double gamma = 0.5;

  void validate() const;
};

/// k_t = k_bar t^beta, eta_t = eta_bar t^delta, sigma_t = sigma_bar.
struct PowerLawParams {
  double alpha = 0.5;
  double sigma_bar = 0.2;
  double k_bar = 1.0;
  double eta_bar = 1.0;
  double beta = 1.0;
  double delta = -0.5;
};

/// ln L_t(u; k, alpha), log-Laplace transform of the tempered stable
/// subordinator with unit mean rate and variance rate k. Principal branches.
/// k == 0 returns the deterministic-clock limit -u t.
Complex log_laplace(Complex u, double t, double k, double alpha);

/// phi_t * t such that exp(f_t) is a martingale.
double martingale_drift(const TemperedStableSlice& slice);

/// E[exp(i u f_t)] for the additive process at the slice maturity.
Complex ats_cf(Complex u, const TemperedStableSlice& slice);

/// Levy case: time-constant parameters evaluated at time t.
Complex lts_cf(Complex u, double t, const LtsParams& params);

/// Sato case: unit-time LTS law evaluated at u t^gamma, drift re-imposed at t.
Complex sato_cf(Complex u, double t, const SatoParams& params);

/// The ATS slice whose marginal at time t coincides with the Sato law at t.
TemperedStableSlice sato_slice(double t, const SatoParams& params);

TemperedStableSlice lts_slice(double t, const LtsParams& params);

/// Slice of the power-law family at maturity T. Throws std::invalid_argument
/// when p fails check_power_law.
TemperedStableSlice power_law_slice(double T, const PowerLawParams& p);

/// Both inequalities of the power-law existence theorem.
bool check_power_law(const PowerLawParams& p);

/// n-th cumulant of f_t, n in 1..4, from derivatives of the cumulant
/// generating function. Includes the martingale drift in the first cumulant.
double cumulant(const TemperedStableSlice& slice, int order);
double skewness(const TemperedStableSlice& slice);
double excess_kurtosis(const TemperedStableSlice& slice);

/// The commonly quoted closed-form NIG skewness
/// (cubic coefficient 2). It coincides with skewness() at alpha = 0; at
/// alpha = 1/2 the cubic coefficient of the actual NIG law is 3.
double closed_form_nig_skewness(double t, double sigma, double k, double eta);

/// Modified Bessel function of the second kind K_nu(z), nu in [1/2, 3/2),
/// z > 0, from its Laplace-type integral representation.
double bessel_k_integral(double nu, double z);

/// Levy density nu_t(x) of f_t (x != 0, k > 0).
double levy_density(double x, const TemperedStableSlice& slice);

// ---------------------------------------------------------------------------
// Existence conditions

struct ConditionViolation {
  std::string condition;  // "g1", "g2", "g3", "limit_proxy_drift", "limit_proxy_jump"
  double t = 0.0;
  std::string detail;
};

class ConditionReport {
 public:
  bool valid() const { return violations_.empty(); }
  const std::vector<ConditionViolation>& violations() const { return violations_; }
  /// Whether the t -> 0 limit condition was assessed by the finite-grid proxy.
  bool limit_proxy_checked() const { return limit_proxy_checked_; }

  void add(ConditionViolation v) { violations_.push_back(std::move(v)); }
  void set_limit_proxy_checked(bool b) { limit_proxy_checked_ = b; }

 private:
  std::vector<ConditionViolation> violations_;
  bool limit_proxy_checked_ = false;
};

/// Values of the monotonicity functions at one slice. g3 is carried as
/// h3 = alpha * ln g3 (ln t - ln k at alpha = 0), which is monotone exactly
/// when g3 is and stays finite for small alpha.
struct MonotonicityValues {
  double g1;
  double g2;
  double h3;
};

MonotonicityValues monotonicity_values(const TemperedStableSlice& slice);

/// True when `next` has decreased from `prev` by more than the grid noise
/// allowance 1e-10 * (1 + |prev|). Handles infinite values.
bool decreased(double prev, double next);

/// Sufficient existence conditions on a time-ordered slice grid.
ConditionReport check_existence(std::span<const TemperedStableSlice> slices);

}  // namespace ats
