#pragma once

#include <functional>
#include <vector>

#include "ats/market.hpp"
#include "ats/models.hpp"
#include "ats/pricing.hpp"

namespace ats {

/// Layout of a generated option surface. Forwards follow
/// F(T) = spot * exp((rate - dividend) T), discounts B(T) = exp(-rate T).
struct SurfaceSpec {
  std::vector<double> expiries = {0.06, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0};
  double spot = 100.0;
  double rate = 0.01;
  double dividend = 0.005;
  double strike_step = 1.0;
  double width_sd = 2.5;       // strikes span F exp(+-width_sd * ref_vol * sqrt(T))
  double ref_vol = 0.2;
  double spread_rel = 0.02;    // ask - bid = max(spread_min, spread_rel * price)
  double spread_min = 0.01;
};

struct SyntheticSurface {
  std::vector<OptionQuote> quotes;
  DiscountCurve curve;
  double spot = 0.0;
  std::vector<double> forwards;
  std::vector<TemperedStableSlice> slices;
};

using SliceLaw = std::function<TemperedStableSlice(double T)>;

/// Calls and puts on a regular strike grid, priced by the Lewis formula
/// from the given law; quotes are symmetric around the model price.
SyntheticSurface make_surface(const SliceLaw& law, const SurfaceSpec& spec = {},
                              const QuadratureConfig& q = {});

SyntheticSurface power_law_surface(const PowerLawParams& p, const SurfaceSpec& spec = {});

}  // namespace ats
