#include "ats/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ats/format.hpp"

namespace ats {

using nlohmann::json;

namespace {

// Non-finite numbers become null so the document stays valid JSON.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double get_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("calibration json: missing number '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

std::string OutputStamp::csv_line() const {
  return std::string("# ") + kToolName + " " + kToolVersion + " config=" + config_hash;
}

json OutputStamp::meta() const {
  return {{"name", kToolName}, {"version", kToolVersion}, {"config_hash", config_hash}};
}

json to_json(const ConditionReport& r) {
  json v = json::array();
  for (const auto& x : r.violations()) {
    v.push_back({{"condition", x.condition}, {"t", num(x.t)}, {"detail", x.detail}});
  }
  return {{"valid", r.valid()}, {"limit_proxy_checked", r.limit_proxy_checked()}, {"violations", v}};
}

json to_json(const SliceFit& s) {
  json j = {{"expiry", num(s.expiry)},
            {"alpha", num(s.slice.alpha())},
            {"sigma", num(s.slice.sigma())},
            {"k", num(s.slice.k())},
            {"eta", num(s.slice.eta())},
            {"n_quotes", s.n_quotes},
            {"sse", num(s.sse)},
            {"mse", num(s.mse)},
            {"mape", num(s.mape)},
            {"converged", s.converged},
            {"monotonicity_violation", s.monotonicity_violation},
            {"penalty", num(s.penalty)},
            {"status", s.status}};
  if (s.covariance) {
    json c = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) c.push_back(num((*s.covariance)(r, col)));
    }
    j["covariance"] = c;
  } else {
    j["covariance"] = nullptr;
  }
  return j;
}

json to_json(const CalibrationResult& r) {
  json slices = json::array();
  for (const auto& s : r.slices) slices.push_back(to_json(s));
  json global = nullptr;
  if (r.lts) {
    global = {{"sigma", num(r.lts->sigma)}, {"k", num(r.lts->k)}, {"eta", num(r.lts->eta)}};
  } else if (r.sato) {
    global = {{"sigma", num(r.sato->sigma)},
              {"k", num(r.sato->k)},
              {"eta", num(r.sato->eta)},
              {"gamma", num(r.sato->gamma)}};
  }
  return {{"family", to_string(r.family)},
          {"alpha", num(r.alpha)},
          {"global_params", global},
          {"covariance_order", {"k", "sigma2", "eta"}},
          {"slices", slices},
          {"metrics", {{"n_quotes", r.n_quotes}, {"mse", num(r.mse)}, {"mape", num(r.mape)}}},
          {"conditions", to_json(r.conditions)},
          {"optimizer",
           {{"evaluations", r.evaluations}, {"converged", r.converged}, {"failures", r.failures}}}};
}

json to_json(const ScalingFit& f) {
  return {{"slope", num(f.slope)},
          {"intercept", num(f.intercept)},
          {"var_slope", num(f.var_slope)},
          {"var_intercept", num(f.var_intercept)},
          {"cov_slope_intercept", num(f.cov_slope_intercept)},
          {"slope_null", num(f.slope_null)},
          {"intercept_null", num(f.intercept_null)},
          {"p_value_slope_null", num(f.p_value_slope_null)},
          {"p_value_intercept_null", num(f.p_value_intercept_null)},
          {"chi2", num(f.chi2)},
          {"points", f.points},
          {"iterations", f.iterations}};
}

json to_json(const RescaledPoint& p) {
  return {{"expiry", num(p.expiry)},
          {"theta", num(p.theta)},
          {"k_hat", num(p.k_hat)},
          {"eta_hat", num(p.eta_hat)},
          {"var_ln_k", num(p.var_ln_k)},
          {"var_ln_eta", num(p.var_ln_eta)},
          {"var_ln_theta", num(p.var_ln_theta)},
          {"corr_lnk_lntheta", num(p.corr_lnk_lntheta)}};
}

json to_json(const ScalingAnalysis& a) {
  return {{"fit_k", to_json(a.fit_k)},
          {"fit_eta", to_json(a.fit_eta)},
          {"beta", num(a.beta)},
          {"delta", num(a.delta)},
          {"k_bar", num(a.k_bar)},
          {"eta_bar", num(a.eta_bar)},
          {"se_k_bar", num(a.se_k_bar)},
          {"se_eta_bar", num(a.se_eta_bar)},
          {"tests",
           {{"p_beta_eq_1", num(a.p_beta_one)},
            {"p_delta_eq_minus_half", num(a.p_delta_minus_half)},
            {"p_constant_eta", num(a.p_constant_eta)},
            {"p_k_bar_zero_intercept", num(a.p_k_bar_intercept)},
            {"p_eta_bar_zero_intercept", num(a.p_eta_bar_intercept)},
            {"p_k_bar_zero_delta_method", num(a.p_k_bar_delta)},
            {"p_eta_bar_zero_delta_method", num(a.p_eta_bar_delta)}}}};
}

json to_json(const MomentTermStructure& m) {
  json pts = json::array();
  for (const auto& p : m.points) {
    pts.push_back({{"expiry", num(p.expiry)},
                   {"sqrt_t", num(p.sqrt_t)},
                   {"skewness", num(p.skewness)},
                   {"skewness_se", num(p.skewness_se)},
                   {"excess_kurtosis", num(p.kurtosis)},
                   {"excess_kurtosis_se", num(p.kurtosis_se)}});
  }
  return {{"points", pts},
          {"skewness_fit", to_json(m.skewness_fit)},
          {"kurtosis_fit", to_json(m.kurtosis_fit)},
          {"p_skewness_no_slope", num(m.p_skewness_no_slope)},
          {"p_kurtosis_no_slope", num(m.p_kurtosis_no_slope)}};
}

CalibrationResult calibration_from_json(const json& j) {
  try {
    CalibrationResult r;
    r.family = parse_family(j.at("family").get<std::string>());
    r.alpha = get_number(j, "alpha");
    for (const auto& s : j.at("slices")) {
      SliceFit f;
      f.expiry = get_number(s, "expiry");
      f.slice = TemperedStableSlice(f.expiry, r.alpha, get_number(s, "sigma"), get_number(s, "k"),
                                    get_number(s, "eta"));
      f.n_quotes = s.value("n_quotes", 0);
      f.sse = s.value("sse", 0.0);
      f.mse = s.value("mse", 0.0);
      f.mape = s.value("mape", 0.0);
      f.converged = s.value("converged", false);
      f.status = s.value("status", std::string("ok"));
      if (s.contains("covariance") && s.at("covariance").is_array()) {
        const auto& c = s.at("covariance");
        if (c.size() != 9) throw InputError("calibration json: covariance needs 9 entries");
        Eigen::Matrix3d m;
        for (int i = 0; i < 9; ++i) {
          if (!c.at(static_cast<std::size_t>(i)).is_number()) {
            throw InputError("calibration json: non-numeric covariance entry");
          }
          m(i / 3, i % 3) = c.at(static_cast<std::size_t>(i)).get<double>();
        }
        f.covariance = m;
      }
      r.slices.push_back(std::move(f));
    }
    std::vector<TemperedStableSlice> grid;
    for (const auto& s : r.slices) grid.push_back(s.slice);
    r.conditions = check_existence(grid);
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("calibration json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("calibration json: ") + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_scaling_points(std::ostream& out, std::span<const RescaledPoint> points,
                          const OutputStamp& stamp) {
  out << stamp.csv_line() << '\n';
  out << "expiry_yf,ln_theta,ln_k_hat,ln_eta_hat,se_ln_theta,se_ln_k_hat,se_ln_eta_hat,"
         "corr_lnk_lntheta\n";
  for (const auto& p : points) {
    out << format_number(p.expiry) << ',' << format_number(std::log(p.theta)) << ','
        << format_number(std::log(p.k_hat)) << ',' << format_number(std::log(p.eta_hat)) << ','
        << format_number(std::sqrt(p.var_ln_theta)) << ',' << format_number(std::sqrt(p.var_ln_k))
        << ',' << format_number(std::sqrt(p.var_ln_eta)) << ','
        << format_number(p.corr_lnk_lntheta) << '\n';
  }
}

void write_scaling_lines(std::ostream& out, const ScalingAnalysis& a,
                         std::span<const RescaledPoint> points, const OutputStamp& stamp) {
  out << stamp.csv_line() << '\n';
  out << "ln_theta,ln_k_hat_fit,ln_eta_hat_fit\n";
  if (points.empty()) return;
  double lo = std::log(points.front().theta);
  double hi = lo;
  for (const auto& p : points) {
    lo = std::min(lo, std::log(p.theta));
    hi = std::max(hi, std::log(p.theta));
  }
  constexpr int kSteps = 50;
  for (int i = 0; i <= kSteps; ++i) {
    const double x = lo + (hi - lo) * i / kSteps;
    out << format_number(x) << ',' << format_number(a.fit_k.intercept + a.fit_k.slope * x) << ','
        << format_number(a.fit_eta.intercept + a.fit_eta.slope * x) << '\n';
  }
}

void write_moments(std::ostream& out, const MomentTermStructure& m, const OutputStamp& stamp) {
  out << stamp.csv_line() << '\n';
  out << "expiry_yf,sqrt_t,skewness,skewness_se,excess_kurtosis,excess_kurtosis_se,"
         "skewness_fit,excess_kurtosis_fit\n";
  for (const auto& p : m.points) {
    out << format_number(p.expiry) << ',' << format_number(p.sqrt_t) << ','
        << format_number(p.skewness) << ',' << format_number(p.skewness_se) << ','
        << format_number(p.kurtosis) << ',' << format_number(p.kurtosis_se) << ','
        << format_number(m.skewness_fit.intercept + m.skewness_fit.slope * p.sqrt_t) << ','
        << format_number(m.kurtosis_fit.intercept + m.kurtosis_fit.slope * p.sqrt_t) << '\n';
  }
}

}  // namespace ats
