#include "ats/synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace ats {

SyntheticSurface make_surface(const SliceLaw& law, const SurfaceSpec& spec,
                              const QuadratureConfig& q) {
  if (spec.expiries.empty()) throw std::invalid_argument("make_surface: no expiries");
  if (!(spec.spot > 0.0) || !(spec.strike_step > 0.0)) {
    throw std::invalid_argument("make_surface: spot and strike step must be > 0");
  }
  SyntheticSurface out;
  out.spot = spec.spot;
  std::vector<std::pair<double, double>> pillars;
  for (double T : spec.expiries) {
    const double F = spec.spot * std::exp((spec.rate - spec.dividend) * T);
    const double B = std::exp(-spec.rate * T);
    pillars.emplace_back(T, B);
    const auto slice = law(T);
    out.slices.push_back(slice);
    out.forwards.push_back(F);

    const double half_width = spec.width_sd * spec.ref_vol * std::sqrt(T);
    const double k_lo = std::ceil(F * std::exp(-half_width) / spec.strike_step);
    const double k_hi = std::floor(F * std::exp(half_width) / spec.strike_step);
    std::vector<double> strikes;
    for (double i = std::max(k_lo, 1.0); i <= k_hi; i += 1.0) strikes.push_back(i * spec.strike_step);

    const auto calls = lewis_call_prices(make_cf(slice), F, B, strikes, q);
    for (std::size_t i = 0; i < strikes.size(); ++i) {
      const double K = strikes[i];
      const double prices[2] = {calls[i], put_from_parity(calls[i], F, B, K)};
      const OptionSide sides[2] = {OptionSide::Call, OptionSide::Put};
      for (int s = 0; s < 2; ++s) {
        const double p = std::max(prices[s], 0.0);
        const double half = 0.5 * std::max(spec.spread_min, spec.spread_rel * p);
        OptionQuote quote;
        quote.expiry = T;
        quote.strike = K;
        quote.side = sides[s];
        quote.bid = std::max(p - half, 0.0);
        quote.ask = p + half;
        out.quotes.push_back(quote);
      }
    }
  }
  out.curve = DiscountCurve(std::move(pillars));
  return out;
}

SyntheticSurface power_law_surface(const PowerLawParams& p, const SurfaceSpec& spec) {
  return make_surface([&p](double T) { return power_law_slice(T, p); }, spec);
}

}  // namespace ats
