#include "ats/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "ats/format.hpp"

namespace ats {

namespace {

struct Box3 {
  std::vector<double> lo;
  std::vector<double> hi;
};

Box3 slice_box(const ParameterBox& b) {
  return {{std::log(b.sigma_lo), std::log(b.k_lo), b.eta_lo},
          {std::log(b.sigma_hi), std::log(b.k_hi), b.eta_hi}};
}

bool inside(std::span<const double> x, const std::vector<double>& lo,
            const std::vector<double>& hi) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lo[j] && x[j] <= hi[j])) return false;
  }
  return true;
}

TemperedStableSlice slice_from(std::span<const double> x, double T, double alpha) {
  return TemperedStableSlice(T, alpha, std::exp(x[0]), std::exp(x[1]), x[2]);
}

std::vector<double> point_of(const TemperedStableSlice& s) {
  return {std::log(s.sigma()), std::log(std::max(s.k(), 1e-300)), s.eta()};
}

// Implied vol of the quote closest to the forward, read on its own side.
double atm_vol(const ExpiryData& e) {
  const double F = e.forward.fwd_mid;
  const OptionQuote* best = nullptr;
  for (const auto& q : e.quotes) {
    if (!best || std::abs(q.strike - F) < std::abs(best->strike - F)) best = &q;
  }
  if (!best) return 0.2;
  try {
    const double v = implied_vol(best->mid(), F, best->strike, e.expiry, e.discount, best->side);
    if (v > 0.01 && v < 2.0) return v;
  } catch (const std::exception&) {
  }
  return 0.2;
}

struct Fit {
  double sse = 0.0;
  double mape = 0.0;
};

Fit fit_metrics(const CharacteristicFunction& cf, const ExpiryData& e, const QuadratureConfig& q) {
  const auto prices = model_prices(cf, e, q);
  Fit m;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double mid = e.quotes[i].mid();
    const double r = prices[i] - mid;
    m.sse += r * r;
    m.mape += std::abs(r) / mid;
  }
  if (!prices.empty()) m.mape /= static_cast<double>(prices.size());
  return m;
}

std::string expiry_label(double T) { return "T=" + format_number(T); }

void aggregate(CalibrationResult& r) {
  double sse = 0.0;
  double ape = 0.0;
  int n = 0;
  for (const auto& s : r.slices) {
    sse += s.sse;
    ape += s.mape * s.n_quotes;
    n += s.n_quotes;
  }
  r.n_quotes = n;
  r.mse = n > 0 ? sse / n : 0.0;
  r.mape = n > 0 ? ape / n : 0.0;
}

}  // namespace

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::LTS:
      return "LTS";
    case ModelFamily::Sato:
      return "SATO";
    case ModelFamily::ATS:
      return "ATS";
  }
  return "?";
}

ModelFamily parse_family(const std::string& s) {
  std::string u;
  for (char c : s) u.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (u == "LTS") return ModelFamily::LTS;
  if (u == "SATO") return ModelFamily::Sato;
  if (u == "ATS") return ModelFamily::ATS;
  throw std::invalid_argument("unknown model family '" + s + "' (expected LTS, SATO or ATS)");
}

std::vector<double> model_prices(const CharacteristicFunction& cf, const ExpiryData& e,
                                 const QuadratureConfig& q) {
  std::vector<double> strikes;
  strikes.reserve(e.quotes.size());
  for (const auto& quote : e.quotes) strikes.push_back(quote.strike);
  const double F = e.forward.fwd_mid;
  auto prices = lewis_call_prices(cf, F, e.discount, strikes, q);
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (e.quotes[i].side == OptionSide::Put) {
      prices[i] = put_from_parity(prices[i], F, e.discount, strikes[i]);
    }
  }
  return prices;
}

double objective(const CharacteristicFunction& cf, const ExpiryData& e,
                 const QuadratureConfig& q) {
  const auto prices = model_prices(cf, e, q);
  double sse = 0.0;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double r = prices[i] - e.quotes[i].mid();
    sse += r * r;
  }
  return sse;
}

double objective(const TemperedStableSlice& slice, const ExpiryData& e,
                 const QuadratureConfig& q) {
  return objective(make_cf(slice), e, q);
}

double monotonicity_penalty(const TemperedStableSlice& prev, const TemperedStableSlice& cand) {
  const auto a = monotonicity_values(prev);
  const auto b = monotonicity_values(cand);
  auto drop = [](double before, double after) {
    if (std::isinf(before) || std::isinf(after)) return after < before ? kInvalidPenalty : 0.0;
    const double d = std::max(0.0, before - after);
    return d * d;
  };
  const double total = drop(a.g1, b.g1) + drop(a.g2, b.g2) + drop(a.h3, b.h3);
  return std::min(kInvalidPenalty, kMonotonicityWeight * total);
}

Eigen::MatrixXd param_covariance(const Eigen::MatrixXd& F, const Eigen::MatrixXd& W,
                                 const Eigen::MatrixXd& S) {
  const auto n = F.rows();
  if (W.rows() != n || W.cols() != n || S.rows() != n || S.cols() != n) {
    throw std::invalid_argument("param_covariance: dimension mismatch");
  }
  const Eigen::MatrixXd A = F.transpose() * W * F;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(F);
  qr.setThreshold(1e-12);
  if (qr.rank() < F.cols()) throw RankDeficientError("param_covariance: jacobian is rank deficient");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw RankDeficientError("param_covariance: F'WF is singular");
  const Eigen::MatrixXd Ainv = lu.inverse();
  const Eigen::MatrixXd meat = F.transpose() * W * S * W.transpose() * F;
  const Eigen::MatrixXd C = Ainv * meat * Ainv;
  return 0.5 * (C + C.transpose());
}

Eigen::MatrixXd param_covariance(const Eigen::MatrixXd& F, const Eigen::VectorXd& price_var) {
  const auto n = F.rows();
  if (price_var.size() != n) throw std::invalid_argument("param_covariance: dimension mismatch");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(F);
  qr.setThreshold(1e-12);
  if (qr.rank() < F.cols()) throw RankDeficientError("param_covariance: jacobian is rank deficient");
  const Eigen::MatrixXd A = F.transpose() * F;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw RankDeficientError("param_covariance: F'F is singular");
  const Eigen::MatrixXd Ainv = lu.inverse();
  const Eigen::MatrixXd meat = F.transpose() * price_var.asDiagonal() * F;
  const Eigen::MatrixXd C = Ainv * meat * Ainv;
  return 0.5 * (C + C.transpose());
}

Eigen::MatrixXd price_jacobian(const TemperedStableSlice& s, const ExpiryData& e,
                               const QuadratureConfig& q) {
  const double g[3] = {s.k(), s.variance(), s.eta()};
  Eigen::MatrixXd J(static_cast<Eigen::Index>(e.quotes.size()), 3);
  for (int j = 0; j < 3; ++j) {
    const double h = std::max(1e-5 * std::abs(g[j]), 1e-8);
    double up[3] = {g[0], g[1], g[2]};
    double dn[3] = {g[0], g[1], g[2]};
    up[j] += h;
    dn[j] -= h;
    auto at = [&](const double* p) {
      const TemperedStableSlice t(s.t(), s.alpha(), std::sqrt(p[1]), p[0], p[2]);
      return model_prices(make_cf(t), e, q);
    };
    const auto pu = at(up);
    const auto pd = at(dn);
    for (std::size_t i = 0; i < pu.size(); ++i) {
      J(static_cast<Eigen::Index>(i), j) = (pu[i] - pd[i]) / (2.0 * h);
    }
  }
  return J;
}

SliceFit calibrate_slice(const ExpiryData& e, double alpha, const SliceOptions& opts,
                         const OptimizerConfig& cfg, const QuadratureConfig& q,
                         const ParameterBox& box) {
  cfg.validate();
  if (e.quotes.size() < 4) {
    throw InsufficientDataError("calibrate_slice: " + expiry_label(e.expiry) + " has " +
                                std::to_string(e.quotes.size()) + " quotes, need at least 4");
  }
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("calibrate_slice: alpha in [0, 1)");
  const Box3 b = slice_box(box);
  const double T = e.expiry;

  auto f = [&](std::span<const double> x) {
    if (!inside(x, b.lo, b.hi)) return kInvalidPenalty;
    try {
      const auto s = slice_from(x, T, alpha);
      double v = objective(s, e, q);
      if (opts.prev) v += monotonicity_penalty(*opts.prev, s);
      return std::isfinite(v) ? v : kInvalidPenalty;
    } catch (const std::exception&) {
      return kInvalidPenalty;
    }
  };

  std::vector<std::vector<double>> starts;
  auto add_start = [&](std::vector<double> x) {
    for (std::size_t j = 0; j < 3; ++j) x[j] = std::clamp(x[j], b.lo[j], b.hi[j]);
    starts.push_back(std::move(x));
  };
  if (opts.prev) add_start(point_of(*opts.prev));
  for (const auto& s : opts.extra_starts) add_start(point_of(s));
  const double vol = atm_vol(e);
  for (double k : {0.2, 2.0}) {
    for (double eta : {0.0, 2.0}) add_start({std::log(vol), std::log(k), eta});
  }

  const std::vector<double> step = {0.1, 0.5, 0.25};
  OptimizeResult best;
  best.f = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  for (const auto& x0 : starts) {
    const auto r = nelder_mead(f, x0, cfg, step);
    evaluations += r.evaluations;
    if (r.f < best.f) best = r;
  }
  // Restart from the incumbent: a collapsed simplex can stall short of the minimum.
  for (int r = 0; r < cfg.restarts; ++r) {
    const auto again = nelder_mead(f, best.x, cfg, {0.02, 0.1, 0.05});
    evaluations += again.evaluations;
    const bool improved = again.f < best.f - cfg.tolerance * (1.0 + std::abs(best.f));
    if (again.f <= best.f) best = again;
    if (!improved) break;
  }
  if (!(best.f < kInvalidPenalty)) {
    throw std::runtime_error("calibrate_slice: " + expiry_label(T) +
                             ": no admissible parameter set found");
  }

  SliceFit out;
  out.expiry = T;
  out.slice = slice_from(best.x, T, alpha);
  out.n_quotes = static_cast<int>(e.quotes.size());
  const auto cf = make_cf(out.slice);
  const Fit m = fit_metrics(cf, e, q);
  out.sse = m.sse;
  out.mse = m.sse / out.n_quotes;
  out.mape = m.mape;
  out.converged = best.converged;
  if (!best.converged) out.status = "max_iterations";
  if (opts.prev) {
    out.penalty = monotonicity_penalty(*opts.prev, out.slice);
    const auto a = monotonicity_values(*opts.prev);
    const auto c = monotonicity_values(out.slice);
    out.monotonicity_violation =
        decreased(a.g1, c.g1) || decreased(a.g2, c.g2) || decreased(a.h3, c.h3);
    if (out.monotonicity_violation) out.status = "monotonicity_violation";
  }
  if (opts.compute_covariance) {
    try {
      const auto J = price_jacobian(out.slice, e, q);
      Eigen::VectorXd var(J.rows());
      for (Eigen::Index i = 0; i < J.rows(); ++i) {
        const auto& quote = e.quotes[static_cast<std::size_t>(i)];
        const double spread = quote.ask - quote.bid;
        var(i) = spread * spread / 16.0;
      }
      out.covariance = Eigen::Matrix3d(param_covariance(J, var));
    } catch (const std::exception& ex) {
      out.status += std::string("; covariance unavailable: ") + ex.what();
    }
  }
  out.evaluations = evaluations;
  return out;
}

CalibrationResult calibrate_surface(std::span<const ExpiryData> expiries, ModelFamily family,
                                    double alpha, const OptimizerConfig& cfg,
                                    const QuadratureConfig& q, const ParameterBox& box) {
  cfg.validate();
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("calibrate: alpha in [0, 1)");
  if (expiries.empty()) throw InsufficientDataError("calibrate: no expiries");
  for (std::size_t i = 1; i < expiries.size(); ++i) {
    if (!(expiries[i].expiry > expiries[i - 1].expiry)) {
      throw std::invalid_argument("calibrate: expiries must be strictly increasing");
    }
  }

  CalibrationResult res;
  res.family = family;
  res.alpha = alpha;

  if (family == ModelFamily::ATS) {
    std::optional<TemperedStableSlice> prev;
    for (const auto& e : expiries) {
      try {
        SliceOptions opts;
        opts.prev = prev;
        auto fit = calibrate_slice(e, alpha, opts, cfg, q, box);
        prev = fit.slice;
        res.evaluations += fit.evaluations;
        res.converged = res.converged && fit.converged;
        res.slices.push_back(std::move(fit));
      } catch (const std::exception& ex) {
        res.failures.push_back(expiry_label(e.expiry) + ": " + ex.what());
        res.converged = false;
      }
    }
  } else {
    const bool sato = family == ModelFamily::Sato;
    Bounds bounds;
    bounds.lower = {std::log(box.sigma_lo), std::log(box.k_lo), box.eta_lo};
    bounds.upper = {std::log(box.sigma_hi), std::log(box.k_hi), box.eta_hi};
    if (sato) {
      bounds.lower.push_back(box.gamma_lo);
      bounds.upper.push_back(box.gamma_hi);
    }
    auto slice_at = [&](std::span<const double> x, double T) {
      if (sato) {
        SatoParams p{alpha, std::exp(x[0]), std::exp(x[1]), x[2], x[3]};
        return sato_slice(T, p);
      }
      return lts_slice(T, LtsParams{std::exp(x[0]), std::exp(x[1]), x[2], alpha});
    };
    auto f = [&](std::span<const double> x) {
      try {
        double total = 0.0;
        for (const auto& e : expiries) total += objective(slice_at(x, e.expiry), e, q);
        return std::isfinite(total) ? total : kInvalidPenalty;
      } catch (const std::exception&) {
        return kInvalidPenalty;
      }
    };
    const auto opt = differential_evolution(f, bounds, cfg);
    res.evaluations = opt.evaluations;
    res.converged = opt.converged && opt.f < kInvalidPenalty;
    const auto& x = opt.x;
    if (sato) {
      res.sato = SatoParams{alpha, std::exp(x[0]), std::exp(x[1]), x[2], x[3]};
    } else {
      res.lts = LtsParams{std::exp(x[0]), std::exp(x[1]), x[2], alpha};
    }
    for (const auto& e : expiries) {
      try {
        SliceFit fit;
        fit.expiry = e.expiry;
        fit.slice = slice_at(x, e.expiry);
        fit.n_quotes = static_cast<int>(e.quotes.size());
        const Fit m = fit_metrics(make_cf(fit.slice), e, q);
        fit.sse = m.sse;
        fit.mse = fit.n_quotes > 0 ? m.sse / fit.n_quotes : 0.0;
        fit.mape = m.mape;
        fit.converged = res.converged;
        res.slices.push_back(std::move(fit));
      } catch (const std::exception& ex) {
        res.failures.push_back(expiry_label(e.expiry) + ": " + ex.what());
        res.converged = false;
      }
    }
  }

  std::vector<TemperedStableSlice> grid;
  for (const auto& s : res.slices) grid.push_back(s.slice);
  res.conditions = check_existence(grid);
  aggregate(res);
  return res;
}

}  // namespace ats
