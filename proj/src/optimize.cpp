#include "ats/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDiffWeight = 0.8;
constexpr double kCrossover = 0.9;

double safe_eval(const Objective& f, std::span<const double> x, int& evals) {
  ++evals;
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_iterations <= 0 || generations <= 0 || restarts <= 0) {
    throw std::invalid_argument("optimizer: iteration counts must be positive");
  }
  if (population < 4) throw std::invalid_argument("optimizer: population must be >= 4");
  if (!(tolerance > 0.0) || !(xtol > 0.0)) {
    throw std::invalid_argument("optimizer: tolerances must be positive");
  }
}

OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg,
                           std::vector<double> step) {
  cfg.validate();
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
  if (step.empty()) {
    step.resize(n);
    for (std::size_t i = 0; i < n; ++i) step[i] = x0[i] != 0.0 ? 0.05 * std::abs(x0[i]) : 2.5e-4;
  }
  if (step.size() != n) throw std::invalid_argument("nelder_mead: step size mismatch");

  OptimizeResult res;
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> fv(n + 1);
  fv[0] = safe_eval(f, pts[0], res.evaluations);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i + 1][i] += step[i];
    fv[i + 1] = safe_eval(f, pts[i + 1], res.evaluations);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto along = [&](std::vector<double>& out, double t, const std::vector<double>& to) {
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + t * (to[j] - centroid[j]);
  };

  for (res.iterations = 0; res.iterations < cfg.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    {
      std::vector<std::vector<double>> p2(n + 1);
      std::vector<double> f2(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        p2[i] = std::move(pts[order[i]]);
        f2[i] = fv[order[i]];
      }
      pts = std::move(p2);
      fv = std::move(f2);
    }

    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(pts[i][j] - pts[0][j]));
    }
    const double spread = fv[n] - fv[0];
    if (diameter <= cfg.xtol && (spread <= cfg.tolerance || fv[n] == fv[0])) {
      res.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    const auto& worst = pts[n];
    along(xr, -1.0, worst);
    const double fr = safe_eval(f, xr, res.evaluations);
    if (fr < fv[0]) {
      along(xe, -2.0, worst);
      const double fe = safe_eval(f, xe, res.evaluations);
      if (fe < fr) {
        pts[n] = xe;
        fv[n] = fe;
      } else {
        pts[n] = xr;
        fv[n] = fr;
      }
      continue;
    }
    if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
      continue;
    }
    bool shrink = false;
    if (fr < fv[n]) {
      along(xc, -0.5, worst);
      const double fc = safe_eval(f, xc, res.evaluations);
      if (fc <= fr) {
        pts[n] = xc;
        fv[n] = fc;
      } else {
        shrink = true;
      }
    } else {
      along(xc, 0.5, worst);
      const double fc = safe_eval(f, xc, res.evaluations);
      if (fc < fv[n]) {
        pts[n] = xc;
        fv[n] = fc;
      } else {
        shrink = true;
      }
    }
    if (shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 0; j < n; ++j) pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
        fv[i] = safe_eval(f, pts[i], res.evaluations);
      }
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = pts[best];
  res.f = fv[best];
  return res;
}

OptimizeResult differential_evolution(const Objective& f, const Bounds& bounds,
                                      const OptimizerConfig& cfg) {
  cfg.validate();
  const std::size_t n = bounds.lower.size();
  if (n == 0 || bounds.upper.size() != n) {
    throw std::invalid_argument("differential_evolution: malformed bounds");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!(bounds.lower[j] < bounds.upper[j]) || !std::isfinite(bounds.lower[j]) ||
        !std::isfinite(bounds.upper[j])) {
      throw std::invalid_argument("differential_evolution: bounds must be finite with lower < upper");
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto np = static_cast<std::size_t>(cfg.population);
  std::uniform_int_distribution<std::size_t> pick(0, np - 1);
  std::uniform_int_distribution<std::size_t> pick_dim(0, n - 1);

  OptimizeResult res;
  std::vector<std::vector<double>> pop(np, std::vector<double>(n));
  std::vector<double> fit(np);
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pop[i][j] = bounds.lower[j] + unit(rng) * (bounds.upper[j] - bounds.lower[j]);
    }
    fit[i] = safe_eval(f, pop[i], res.evaluations);
  }

  std::vector<std::vector<double>> next = pop;
  std::vector<double> next_fit = fit;
  std::vector<double> trial(n);
  for (int g = 0; g < cfg.generations; ++g) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = pick(rng); while (r1 == i);
      do r2 = pick(rng); while (r2 == i || r2 == r1);
      do r3 = pick(rng); while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = pick_dim(rng);
      for (std::size_t j = 0; j < n; ++j) {
        const double u = unit(rng);
        if (j == forced || u < kCrossover) {
          double v = pop[r1][j] + kDiffWeight * (pop[r2][j] - pop[r3][j]);
          // Bounce back between the violated bound and the target member.
          if (v < bounds.lower[j]) v = bounds.lower[j] + unit(rng) * (pop[i][j] - bounds.lower[j]);
          if (v > bounds.upper[j]) v = bounds.upper[j] - unit(rng) * (bounds.upper[j] - pop[i][j]);
          trial[j] = v;
        } else {
          trial[j] = pop[i][j];
        }
      }
      const double ft = safe_eval(f, trial, res.evaluations);
      if (ft <= fit[i]) {
        next[i] = trial;
        next_fit[i] = ft;
      } else {
        next[i] = pop[i];
        next_fit[i] = fit[i];
      }
    }
    pop.swap(next);
    fit.swap(next_fit);
    ++res.iterations;
    const auto [lo, hi] = std::minmax_element(fit.begin(), fit.end());
    if (std::isfinite(*hi) && *hi - *lo <= cfg.tolerance * (1.0 + std::abs(*lo))) break;
  }

  const auto best =
      static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());

  auto boxed = [&](std::span<const double> x) {
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < bounds.lower[j] || x[j] > bounds.upper[j]) return kInf;
    }
    return f(x);
  };

  res.x = pop[best];
  res.f = fit[best];
  for (int r = 0; r < cfg.restarts; ++r) {
    std::vector<double> start = pop[best];
    if (r > 0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double width = bounds.upper[j] - bounds.lower[j];
        start[j] = std::clamp(start[j] + 0.05 * width * (2.0 * unit(rng) - 1.0), bounds.lower[j],
                              bounds.upper[j]);
      }
    }
    std::vector<double> step(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double width = bounds.upper[j] - bounds.lower[j];
      step[j] = (start[j] + 0.01 * width <= bounds.upper[j] ? 1.0 : -1.0) * 0.01 * width;
    }
    const auto polished = nelder_mead(boxed, start, cfg, step);
    res.evaluations += polished.evaluations;
    if (polished.f < res.f) {
      res.x = polished.x;
      res.f = polished.f;
    }
    res.converged = res.converged || polished.converged;
  }
  return res;
}

}  // namespace ats
