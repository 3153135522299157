#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "ats/calibration.hpp"

namespace ats {

/// One calibrated slice in theta-time with first-order log-variances.
struct RescaledPoint {
  double expiry = 0.0;
  double theta = 0.0;    // T sigma_T^2
  double k_hat = 0.0;    // k_T sigma_T^2
  double eta_hat = 0.0;  // eta_T
  double var_ln_k = 0.0;
  double var_ln_eta = 0.0;
  double var_ln_theta = 0.0;
  double corr_lnk_lntheta = 0.0;
};

/// Straight-line fit y = intercept + slope x with Gaussian coefficient
/// variances. The p-values refer to the nulls stored alongside.
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double var_slope = 0.0;
  double var_intercept = 0.0;
  double cov_slope_intercept = 0.0;
  double slope_null = 0.0;
  double intercept_null = 0.0;
  double p_value_slope_null = 1.0;
  double p_value_intercept_null = 1.0;
  double chi2 = 0.0;  // weighted residual sum of squares
  int points = 0;
  int iterations = 0;
};

/// Point from one slice and its covariance over (k, sigma^2, eta). Throws
/// std::invalid_argument when k, sigma or eta is not positive.
RescaledPoint rescale_point(double T, const TemperedStableSlice& slice, const Eigen::Matrix3d& cov);

/// All slices of an ATS calibration; slices without covariance are rejected.
std::vector<RescaledPoint> rescale(const CalibrationResult& result);

/// Two-sided Gaussian p-value of a z statistic.
double two_sided_p(double z);

/// Weighted least squares with covariance (Z'WZ)^-1 (weights are inverse
/// variances of y). Throws InsufficientDataError below 3 points and
/// std::invalid_argument for collinear x.
ScalingFit wls_fit(std::span<const double> x, std::span<const double> y,
                   std::span<const double> weights);

/// York straight-line fit with errors in both coordinates and per-point
/// error correlation. var_x may be zero; var_y must be positive. Starts at
/// the WLS slope, stops when the slope moves by less than 1e-12 (relative
/// to max(1, |slope|)); throws std::runtime_error after 100 iterations.
ScalingFit york_fit(std::span<const double> x, std::span<const double> y,
                    std::span<const double> var_x, std::span<const double> var_y,
                    std::span<const double> corr);

/// p-value of slope == null_value (and fills the fit's slope null).
double test_slope(ScalingFit& fit, double null_value);
double test_intercept(ScalingFit& fit, double null_value);

struct ScalingAnalysis {
  ScalingFit fit_k;    // ln k_hat on ln theta
  ScalingFit fit_eta;  // ln eta_hat on ln theta
  double beta = 0.0, delta = 0.0;
  double k_bar = 0.0, eta_bar = 0.0;
  double se_k_bar = 0.0, se_eta_bar = 0.0;  // delta method
  double p_beta_one = 1.0;         // slope of fit_k == 1
  double p_delta_minus_half = 1.0; // slope of fit_eta == -1/2
  double p_constant_eta = 1.0;     // slope of fit_eta == 0
  // k_bar = 0 and eta_bar = 0 nulls: intercept significance (ln-intercept
  // == 0) and delta-method z = k_bar / se(k_bar) on the level itself.
  double p_k_bar_intercept = 1.0;
  double p_eta_bar_intercept = 1.0;
  double p_k_bar_delta = 1.0;
  double p_eta_bar_delta = 1.0;
};

ScalingAnalysis scaling_analysis(std::span<const RescaledPoint> points);

/// p-value of delta = 0 in the eta_hat fit.
double constant_eta_test(std::span<const RescaledPoint> points);

struct MomentPoint {
  double expiry = 0.0;
  double sqrt_t = 0.0;
  double skewness = 0.0;
  double skewness_se = 0.0;
  double kurtosis = 0.0;  // excess
  double kurtosis_se = 0.0;
};

struct MomentTermStructure {
  std::vector<MomentPoint> points;
  ScalingFit skewness_fit;  // on sqrt(T), slope null 0
  ScalingFit kurtosis_fit;
  double p_skewness_no_slope = 1.0;
  double p_kurtosis_no_slope = 1.0;
};

/// Skewness and excess kurtosis per slice with Gaussian errors from the
/// slice covariance, regressed on sqrt(T) by WLS.
MomentTermStructure moment_term_structure(std::span<const SliceFit> slices);
MomentTermStructure moment_term_structure(const CalibrationResult& result);

}  // namespace ats
