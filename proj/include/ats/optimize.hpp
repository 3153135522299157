#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ats {

struct OptimizerConfig {
  int max_iterations = 2000;  // Nelder-Mead iterations per run
  double tolerance = 1e-12;   // objective spread across the simplex
  double xtol = 1e-8;         // simplex diameter (max-norm)
  int population = 30;        // differential evolution members
  int generations = 200;
  int restarts = 3;           // polishing starts after the evolutionary stage
  std::uint64_t seed = 20130412;

  /// Throws std::invalid_argument unless all settings are positive and
  /// population >= 4.
  void validate() const;
};

struct OptimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Simplex descent with reflection 1, expansion 2, contraction 0.5 and
/// shrink 0.5. Non-finite objective values are treated as +inf. The initial
/// simplex steps by `step` (default 5% of |x0_i|, 2.5e-4 when x0_i = 0).
OptimizeResult nelder_mead(const Objective& f, std::vector<double> x0, const OptimizerConfig& cfg,
                           std::vector<double> step = {});

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// rand/1/bin differential evolution (F = 0.8, CR = 0.9) over a box, then
/// Nelder-Mead polishing of the best member from `restarts` starts (the
/// member itself and seeded perturbations of it). The polish is confined to
/// the box. Deterministic for a fixed seed.
OptimizeResult differential_evolution(const Objective& f, const Bounds& bounds,
                                      const OptimizerConfig& cfg);

}  // namespace ats
