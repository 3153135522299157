#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ats/market.hpp"
#include "ats/models.hpp"
#include "ats/optimize.hpp"
#include "ats/pricing.hpp"

namespace ats {

enum class ModelFamily { LTS, Sato, ATS };

std::string to_string(ModelFamily f);
/// Accepts LTS, SATO, ATS (case-insensitive); throws std::invalid_argument.
ModelFamily parse_family(const std::string& s);

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value assigned to parameter vectors outside the model domain or box.
inline constexpr double kInvalidPenalty = 1e20;

/// Weight of the exterior penalty on g1, g2, g3 decreasing versus the
/// previous slice.
inline constexpr double kMonotonicityWeight = 1e6;

/// Global search box.
struct ParameterBox {
  double sigma_lo = 0.01, sigma_hi = 2.0;
  double k_lo = 1e-4, k_hi = 50.0;
  double eta_lo = -5.0, eta_hi = 20.0;
  double gamma_lo = 0.01, gamma_hi = 1.5;
};

/// Model prices of every quote of one expiry (calls by the Lewis formula,
/// puts from parity), in quote order.
std::vector<double> model_prices(const CharacteristicFunction& cf, const ExpiryData& e,
                                 const QuadratureConfig& q = {});

/// Sum over quotes of (model - mid)^2.
double objective(const CharacteristicFunction& cf, const ExpiryData& e,
                 const QuadratureConfig& q = {});
double objective(const TemperedStableSlice& slice, const ExpiryData& e,
                 const QuadratureConfig& q = {});

/// 1e6 * sum of squared decreases of (g1, g2, alpha ln g3) from prev to cand.
double monotonicity_penalty(const TemperedStableSlice& prev, const TemperedStableSlice& cand);

/// Sandwich covariance (F'WF)^-1 F'W Sigma W F (F'WF)^-1. Throws
/// RankDeficientError when F'WF is singular.
Eigen::MatrixXd param_covariance(const Eigen::MatrixXd& jacobian, const Eigen::MatrixXd& weights,
                                 const Eigen::MatrixXd& price_cov);
/// W = I, Sigma = diag(price_var).
Eigen::MatrixXd param_covariance(const Eigen::MatrixXd& jacobian,
                                 const Eigen::VectorXd& price_var);

/// Central-difference jacobian of the slice's model prices with respect to
/// (k, sigma^2, eta); relative step 1e-5 with absolute floor 1e-8.
Eigen::MatrixXd price_jacobian(const TemperedStableSlice& slice, const ExpiryData& e,
                               const QuadratureConfig& q = {});

struct SliceFit {
  double expiry = 0.0;
  TemperedStableSlice slice{1.0, 0.5, 0.2, 1.0, 0.0};
  std::optional<Eigen::Matrix3d> covariance;  // over (k, sigma^2, eta)
  int n_quotes = 0;
  double sse = 0.0;
  double mse = 0.0;
  double mape = 0.0;
  bool converged = false;
  bool monotonicity_violation = false;  // final point still decreases some g vs prev
  double penalty = 0.0;
  int evaluations = 0;
  std::string status = "ok";
};

struct SliceOptions {
  std::optional<TemperedStableSlice> prev;
  std::vector<TemperedStableSlice> extra_starts;
  bool compute_covariance = true;
};

/// Fit (sigma, k, eta) of one expiry with alpha fixed. Searches in
/// (ln sigma, ln k, eta) by multi-start Nelder-Mead inside the global box.
SliceFit calibrate_slice(const ExpiryData& e, double alpha, const SliceOptions& opts,
                         const OptimizerConfig& cfg, const QuadratureConfig& q = {},
                         const ParameterBox& box = {});

struct CalibrationResult {
  ModelFamily family = ModelFamily::ATS;
  double alpha = 0.5;
  std::optional<LtsParams> lts;
  std::optional<SatoParams> sato;
  std::vector<SliceFit> slices;
  int n_quotes = 0;
  double mse = 0.0;
  double mape = 0.0;
  ConditionReport conditions;
  int evaluations = 0;
  bool converged = true;
  std::vector<std::string> failures;  // per-slice failures, "T=<expiry>: <reason>"
};

/// LTS and Sato: one global vector by differential evolution plus polish;
/// ATS: calibrate_slice in increasing expiry, each constrained by the last
/// successful slice. Slices that fail are recorded in `failures`.
CalibrationResult calibrate_surface(std::span<const ExpiryData> expiries, ModelFamily family,
                                    double alpha, const OptimizerConfig& cfg,
                                    const QuadratureConfig& q = {}, const ParameterBox& box = {});

}  // namespace ats
