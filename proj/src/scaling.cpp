#include "ats/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ats {

namespace {

constexpr int kYorkMaxIterations = 100;

void require_points(std::size_t n, const char* what) {
  if (n < 3) {
    throw InsufficientDataError(std::string(what) + ": need at least 3 points, got " +
                                std::to_string(n));
  }
}

void fill_tests(ScalingFit& f) {
  test_slope(f, f.slope_null);
  test_intercept(f, f.intercept_null);
}

// Gradient of a moment w.r.t. (k, sigma^2, eta) by central differences.
template <class Moment>
Eigen::Vector3d moment_gradient(const TemperedStableSlice& s, Moment m) {
  const double g[3] = {s.k(), s.variance(), s.eta()};
  Eigen::Vector3d grad;
  for (int j = 0; j < 3; ++j) {
    const double h = std::max(1e-6 * std::abs(g[j]), 1e-9);
    double up[3] = {g[0], g[1], g[2]};
    double dn[3] = {g[0], g[1], g[2]};
    up[j] += h;
    dn[j] -= h;
    const TemperedStableSlice su(s.t(), s.alpha(), std::sqrt(up[1]), up[0], up[2]);
    const TemperedStableSlice sd(s.t(), s.alpha(), std::sqrt(dn[1]), dn[0], dn[2]);
    grad(j) = (m(su) - m(sd)) / (2.0 * h);
  }
  return grad;
}

}  // namespace

RescaledPoint rescale_point(double T, const TemperedStableSlice& s, const Eigen::Matrix3d& c) {
  const double k = s.k();
  const double v = s.variance();
  const double eta = s.eta();
  if (!(k > 0.0) || !(v > 0.0) || !(eta > 0.0)) {
    throw std::invalid_argument("rescale: k, sigma and eta must be positive for the log scale");
  }
  RescaledPoint p;
  p.expiry = T;
  p.theta = T * v;
  p.k_hat = k * v;
  p.eta_hat = eta;
  p.var_ln_k = c(0, 0) / (k * k) + c(1, 1) / (v * v) + 2.0 * c(1, 0) / (k * v);
  p.var_ln_eta = c(2, 2) / (eta * eta);
  p.var_ln_theta = c(1, 1) / (v * v);
  const double cov = c(1, 1) / (v * v) + c(1, 0) / (k * v);
  const double denom = std::sqrt(std::max(p.var_ln_k, 0.0) * std::max(p.var_ln_theta, 0.0));
  p.corr_lnk_lntheta = denom > 0.0 ? std::clamp(cov / denom, -1.0, 1.0) : 0.0;
  return p;
}

std::vector<RescaledPoint> rescale(const CalibrationResult& result) {
  std::vector<RescaledPoint> out;
  for (const auto& s : result.slices) {
    if (!s.covariance) {
      throw std::invalid_argument("rescale: slice T=" + std::to_string(s.expiry) +
                                  " has no covariance");
    }
    out.push_back(rescale_point(s.expiry, s.slice, *s.covariance));
  }
  return out;
}

double two_sided_p(double z) {
  if (std::isnan(z)) return 1.0;
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

double test_slope(ScalingFit& fit, double null_value) {
  fit.slope_null = null_value;
  const double se = std::sqrt(fit.var_slope);
  const double diff = fit.slope - null_value;
  fit.p_value_slope_null = diff == 0.0 ? 1.0 : two_sided_p(diff / se);
  return fit.p_value_slope_null;
}

double test_intercept(ScalingFit& fit, double null_value) {
  fit.intercept_null = null_value;
  const double se = std::sqrt(fit.var_intercept);
  const double diff = fit.intercept - null_value;
  fit.p_value_intercept_null = diff == 0.0 ? 1.0 : two_sided_p(diff / se);
  return fit.p_value_intercept_null;
}

ScalingFit wls_fit(std::span<const double> x, std::span<const double> y,
                   std::span<const double> w) {
  const std::size_t n = x.size();
  if (y.size() != n || w.size() != n) throw std::invalid_argument("wls_fit: size mismatch");
  require_points(n, "wls_fit");
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
      throw std::invalid_argument("wls_fit: weights must be positive and finite");
    }
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  // Centred sums keep the normal equations well conditioned.
  const double xbar = swx / sw;
  const double ybar = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - xbar;
    sxx += w[i] * dx * dx;
    sxy += w[i] * dx * (y[i] - ybar);
  }
  double xscale = 0.0;
  for (std::size_t i = 0; i < n; ++i) xscale = std::max(xscale, std::abs(x[i] - xbar));
  if (!(sxx > 0.0) || xscale <= 1e-12 * (1.0 + std::abs(xbar))) {
    throw std::invalid_argument("wls_fit: x values are collinear");
  }
  ScalingFit f;
  f.points = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  f.var_slope = 1.0 / sxx;
  f.var_intercept = 1.0 / sw + xbar * xbar / sxx;
  f.cov_slope_intercept = -xbar / sxx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    f.chi2 += w[i] * r * r;
  }
  fill_tests(f);
  return f;
}

ScalingFit york_fit(std::span<const double> x, std::span<const double> y,
                    std::span<const double> var_x, std::span<const double> var_y,
                    std::span<const double> corr) {
  const std::size_t n = x.size();
  if (y.size() != n || var_x.size() != n || var_y.size() != n || corr.size() != n) {
    throw std::invalid_argument("york_fit: size mismatch");
  }
  require_points(n, "york_fit");
  std::vector<double> wy(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(var_y[i] > 0.0) || !(var_x[i] >= 0.0) || !(std::abs(corr[i]) <= 1.0)) {
      throw std::invalid_argument("york_fit: need var_y > 0, var_x >= 0, |corr| <= 1");
    }
    wy[i] = 1.0 / var_y[i];
  }
  double b = wls_fit(x, y, wy).slope;

  // Variance form of the York equations, so that var_x = 0 is admissible.
  std::vector<double> W(n), beta(n);
  double xbar = 0.0, ybar = 0.0, sw = 0.0;
  auto update = [&](double slope) {
    sw = 0.0;
    double swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sxy = corr[i] * std::sqrt(var_x[i] * var_y[i]);
      const double d = var_y[i] + slope * slope * var_x[i] - 2.0 * slope * sxy;
      if (!(d > 0.0)) throw std::runtime_error("york_fit: degenerate point weight");
      W[i] = 1.0 / d;
      sw += W[i];
      swx += W[i] * x[i];
      swy += W[i] * y[i];
    }
    xbar = swx / sw;
    ybar = swy / sw;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = x[i] - xbar;
      const double v = y[i] - ybar;
      const double sxy = corr[i] * std::sqrt(var_x[i] * var_y[i]);
      beta[i] = W[i] * (u * var_y[i] + slope * v * var_x[i] - (slope * u + v) * sxy);
      num += W[i] * beta[i] * v;
      den += W[i] * beta[i] * u;
    }
    if (den == 0.0) throw std::runtime_error("york_fit: x values are collinear");
    return num / den;
  };

  ScalingFit f;
  f.points = static_cast<int>(n);
  bool converged = false;
  for (int it = 1; it <= kYorkMaxIterations; ++it) {
    const double next = update(b);
    f.iterations = it;
    const bool done = std::abs(next - b) < 1e-12 * std::max(1.0, std::abs(next));
    b = next;
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("york_fit: no convergence within 100 iterations");

  update(b);  // weights and beta at the final slope
  f.slope = b;
  f.intercept = ybar - b * xbar;
  double sw_adj = 0.0, swx_adj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw_adj += W[i];
    swx_adj += W[i] * (xbar + beta[i]);
  }
  const double xadj_bar = swx_adj / sw_adj;
  double swu2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = xbar + beta[i] - xadj_bar;
    swu2 += W[i] * u * u;
  }
  f.var_slope = 1.0 / swu2;
  f.var_intercept = 1.0 / sw_adj + xadj_bar * xadj_bar * f.var_slope;
  f.cov_slope_intercept = -xadj_bar * f.var_slope;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - b * x[i];
    f.chi2 += W[i] * r * r;
  }
  fill_tests(f);
  return f;
}

ScalingAnalysis scaling_analysis(std::span<const RescaledPoint> pts) {
  const std::size_t n = pts.size();
  require_points(n, "scaling_analysis");
  std::vector<double> lt(n), lk(n), le(n), vt(n), vk(n), ve(n), ck(n), zero(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pts[i];
    if (!(p.theta > 0.0 && p.k_hat > 0.0 && p.eta_hat > 0.0)) {
      throw std::invalid_argument("scaling_analysis: theta, k_hat, eta_hat must be positive");
    }
    lt[i] = std::log(p.theta);
    lk[i] = std::log(p.k_hat);
    le[i] = std::log(p.eta_hat);
    vt[i] = p.var_ln_theta;
    vk[i] = p.var_ln_k;
    ve[i] = p.var_ln_eta;
    ck[i] = p.corr_lnk_lntheta;
  }

  ScalingAnalysis a;
  a.fit_k = york_fit(lt, lk, vt, vk, ck);
  a.fit_eta = york_fit(lt, le, vt, ve, zero);
  a.beta = a.fit_k.slope;
  a.delta = a.fit_eta.slope;
  a.p_beta_one = test_slope(a.fit_k, 1.0);
  a.p_delta_minus_half = test_slope(a.fit_eta, -0.5);
  ScalingFit eta_copy = a.fit_eta;
  a.p_constant_eta = test_slope(eta_copy, 0.0);

  a.p_k_bar_intercept = test_intercept(a.fit_k, 0.0);
  a.p_eta_bar_intercept = test_intercept(a.fit_eta, 0.0);
  a.k_bar = std::exp(a.fit_k.intercept);
  a.eta_bar = std::exp(a.fit_eta.intercept);
  a.se_k_bar = a.k_bar * std::sqrt(a.fit_k.var_intercept);
  a.se_eta_bar = a.eta_bar * std::sqrt(a.fit_eta.var_intercept);
  a.p_k_bar_delta = two_sided_p(a.k_bar / a.se_k_bar);
  a.p_eta_bar_delta = two_sided_p(a.eta_bar / a.se_eta_bar);
  return a;
}

double constant_eta_test(std::span<const RescaledPoint> points) {
  return scaling_analysis(points).p_constant_eta;
}

MomentTermStructure moment_term_structure(std::span<const SliceFit> slices) {
  require_points(slices.size(), "moment_term_structure");
  MomentTermStructure m;
  std::vector<double> x, ys, ws, yk, wk;
  for (const auto& s : slices) {
    if (!s.covariance) {
      throw std::invalid_argument("moment_term_structure: slice without covariance");
    }
    const auto& c = *s.covariance;
    MomentPoint p;
    p.expiry = s.expiry;
    p.sqrt_t = std::sqrt(s.expiry);
    p.skewness = skewness(s.slice);
    p.kurtosis = excess_kurtosis(s.slice);
    const Eigen::Vector3d gs = moment_gradient(s.slice, [](const auto& z) { return skewness(z); });
    const Eigen::Vector3d gk =
        moment_gradient(s.slice, [](const auto& z) { return excess_kurtosis(z); });
    const double vs = gs.dot(c * gs);
    const double vk = gk.dot(c * gk);
    if (!(vs > 0.0) || !(vk > 0.0)) {
      throw std::invalid_argument("moment_term_structure: zero moment variance at T=" +
                                  std::to_string(s.expiry));
    }
    p.skewness_se = std::sqrt(vs);
    p.kurtosis_se = std::sqrt(vk);
    x.push_back(p.sqrt_t);
    ys.push_back(p.skewness);
    ws.push_back(1.0 / vs);
    yk.push_back(p.kurtosis);
    wk.push_back(1.0 / vk);
    m.points.push_back(p);
  }
  m.skewness_fit = wls_fit(x, ys, ws);
  m.kurtosis_fit = wls_fit(x, yk, wk);
  m.p_skewness_no_slope = test_slope(m.skewness_fit, 0.0);
  m.p_kurtosis_no_slope = test_slope(m.kurtosis_fit, 0.0);
  return m;
}

MomentTermStructure moment_term_structure(const CalibrationResult& result) {
  return moment_term_structure(std::span<const SliceFit>(result.slices));
}

}  // namespace ats
