#include "ats/pricing.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ats {

namespace {

constexpr double kClampNoise = 1e-9;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct Nodes {
  std::vector<double> z;
  std::vector<double> w;
};

// Integrand envelope |cf(-z - i/2)| / (z^2 + 1/4); |e^{izx}| = 1 drops out.
double envelope(const CharacteristicFunction& cf, double z) {
  return std::abs(cf(Complex(-z, -0.5))) / (z * z + 0.25);
}

// Doubling (or halving) from the configured truncation brackets the point
// where the envelope crosses the tolerance; a few bisection steps then tighten
// the range so the node count is not inflated by up to a factor of two.
double choose_truncation(const CharacteristicFunction& cf, const QuadratureConfig& q) {
  const auto ok = [&](double z) { return envelope(cf, z) <= q.tail_tolerance; };
  double z = q.truncation;
  const double e = envelope(cf, z);
  if (!std::isfinite(e)) throw QuadratureError("lewis: characteristic function not finite");
  double lo, hi;
  if (e > q.tail_tolerance) {
    while (!ok(z)) {
      const double tail = envelope(cf, z);
      if (!std::isfinite(tail)) throw QuadratureError("lewis: characteristic function not finite");
      if (2.0 * z > q.max_truncation) {
        throw QuadratureError("lewis: integrand tail " + std::to_string(tail) +
                              " above tolerance at truncation " + std::to_string(z));
      }
      z *= 2.0;
    }
    hi = z;
    lo = z / 2.0;
  } else {
    while (z / 2.0 >= q.min_truncation && ok(z / 2.0)) z /= 2.0;
    hi = z;
    lo = std::max(z / 2.0, q.min_truncation);
    if (lo >= hi || ok(lo)) return hi;
  }
  for (int i = 0; i < 6; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Nodes make_nodes(double range, const QuadratureConfig& q) {
  Nodes n;
  const double h = q.step();
  if (q.scheme == QuadratureScheme::Trapezoid) {
    const auto count = static_cast<std::size_t>(std::ceil(range / h));
    n.z.reserve(count + 1);
    n.w.reserve(count + 1);
    for (std::size_t j = 0; j <= count; ++j) {
      n.z.push_back(static_cast<double>(j) * h);
      n.w.push_back(j == 0 ? 0.5 * h : h);
    }
    return n;
  }
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  // panels of 4h: the 1/(z^2 + 1/4) poles sit 1/2 off the axis
  const double width = 4.0 * h;
  const auto panels = static_cast<std::size_t>(std::ceil(range / width));
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      n.z.push_back(mid - half * abscissa[i]);
      n.w.push_back(half * weights[i]);
      n.z.push_back(mid + half * abscissa[i]);
      n.w.push_back(half * weights[i]);
    }
  }
  return n;
}

double clamp_call(double price, double forward, double discount, double strike) {
  const double intrinsic = discount * std::max(forward - strike, 0.0);
  const double upper = discount * forward;
  const double noise = kClampNoise * std::max(1.0, upper);
  if (price < intrinsic && intrinsic - price <= noise) return intrinsic;
  if (price > upper && price - upper <= noise) return upper;
  return price;
}

}  // namespace

void OptionSpec::validate() const {
  if (!(strike > 0.0)) throw std::invalid_argument("option: strike must be > 0");
  if (!(expiry > 0.0)) throw std::invalid_argument("option: expiry must be > 0");
}

void QuadratureConfig::validate() const {
  if (!(truncation > 0.0)) throw std::invalid_argument("quadrature: truncation must be > 0");
  if (nodes < 64) throw std::invalid_argument("quadrature: at least 64 nodes");
  if (!(tail_tolerance > 0.0)) throw std::invalid_argument("quadrature: tail tolerance > 0");
}

CharacteristicFunction make_cf(const TemperedStableSlice& slice) {
  const double drift = martingale_drift(slice);
  const double t = slice.t();
  const double var = slice.variance();
  const double shift = 0.5 + slice.eta();
  const double k = slice.k();
  const double alpha = slice.alpha();
  return [=](Complex u) {
    const Complex iu = Complex(0.0, 1.0) * u;
    const Complex arg = iu * shift * var + u * u * var * 0.5;
    return std::exp(log_laplace(arg, t, k, alpha) + iu * drift);
  };
}

CharacteristicFunction make_black_cf(double sigma, double T) {
  const double var_t = sigma * sigma * T;
  return [=](Complex u) {
    const Complex iu = Complex(0.0, 1.0) * u;
    return std::exp(-0.5 * var_t * (iu + u * u));
  };
}

std::vector<double> lewis_call_prices(const CharacteristicFunction& cf, double forward,
                                      double discount, std::span<const double> strikes,
                                      const QuadratureConfig& q) {
  q.validate();
  if (!(forward > 0.0) || !(discount > 0.0)) {
    throw std::invalid_argument("lewis: forward and discount must be > 0");
  }
  const double range = choose_truncation(cf, q);
  const Nodes nodes = make_nodes(range, q);

  // Weighted integrand values without the e^{izx} factor, split re/im.
  const std::size_t m = nodes.z.size();
  std::vector<double> vr(m), vi(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double z = nodes.z[j];
    const Complex v = cf(Complex(-z, -0.5));
    const double scale = nodes.w[j] / (z * z + 0.25);
    vr[j] = scale * v.real();
    vi[j] = scale * v.imag();
  }

  std::vector<double> prices;
  prices.reserve(strikes.size());
  const bool uniform = q.scheme == QuadratureScheme::Trapezoid;
  const double h = q.step();
  for (double strike : strikes) {
    if (!(strike > 0.0)) throw std::invalid_argument("lewis: strike must be > 0");
    const double x = std::log(strike / forward);
    double acc = 0.0;
    if (uniform) {
      // e^{i z_j x} by rotation, re-anchored every 256 nodes against drift.
      const double rc = std::cos(h * x);
      const double rs = std::sin(h * x);
      for (std::size_t j0 = 0; j0 < m; j0 += 256) {
        double pc = std::cos(nodes.z[j0] * x);
        double ps = std::sin(nodes.z[j0] * x);
        const std::size_t j1 = std::min(m, j0 + 256);
        for (std::size_t j = j0; j < j1; ++j) {
          acc += pc * vr[j] - ps * vi[j];
          const double nc = pc * rc - ps * rs;
          ps = pc * rs + ps * rc;
          pc = nc;
        }
      }
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        const double a = nodes.z[j] * x;
        acc += std::cos(a) * vr[j] - std::sin(a) * vi[j];
      }
    }
    const double integral = acc / std::numbers::pi;
    const double call = discount * forward * (1.0 - std::exp(0.5 * x) * integral);
    prices.push_back(clamp_call(call, forward, discount, strike));
  }
  return prices;
}

double lewis_call(const CharacteristicFunction& cf, double forward, double discount,
                  double strike, const QuadratureConfig& q) {
  const double k[] = {strike};
  return lewis_call_prices(cf, forward, discount, k, q).front();
}

double lewis_price(const CharacteristicFunction& cf, double forward, double discount,
                   const OptionSpec& spec, const QuadratureConfig& q) {
  spec.validate();
  const double call = lewis_call(cf, forward, discount, spec.strike, q);
  return spec.side == OptionSide::Call ? call : put_from_parity(call, forward, discount, spec.strike);
}

double put_from_parity(double call, double forward, double discount, double strike) {
  return call - discount * (forward - strike);
}

double call_from_parity(double put, double forward, double discount, double strike) {
  return put + discount * (forward - strike);
}

double black_price(double forward, double strike, double T, double sigma, double discount,
                   OptionSide side) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("black_price: sigma must be >= 0");
  const double sd = sigma * std::sqrt(T);
  double call;
  if (sd == 0.0) {
    call = std::max(forward - strike, 0.0);
  } else {
    const double d1 = (std::log(forward / strike) + 0.5 * sd * sd) / sd;
    call = forward * normal_cdf(d1) - strike * normal_cdf(d1 - sd);
  }
  call *= discount;
  return side == OptionSide::Call ? call : put_from_parity(call, forward, discount, strike);
}

double implied_vol(double price, double forward, double strike, double T, double discount,
                   OptionSide side) {
  const bool is_call = side == OptionSide::Call;
  const double intrinsic = discount * std::max(is_call ? forward - strike : strike - forward, 0.0);
  const double upper = discount * (is_call ? forward : strike);
  const double noise = 1e-12 * std::max(1.0, upper);
  if (!std::isfinite(price) || price < intrinsic - noise || price > upper + noise) {
    throw InversionError("implied_vol: price outside no-arbitrage bounds");
  }
  if (price <= intrinsic + 1e-15 * std::max(1.0, upper)) return 0.0;

  auto f = [&](double s) { return black_price(forward, strike, T, s, discount, side) - price; };
  double lo = 1e-6;
  double hi = 5.0;
  double flo = f(lo);
  const double fhi = f(hi);
  if (fhi < 0.0) throw InversionError("implied_vol: price above the sigma = 5 bracket");
  if (flo >= 0.0) {
    if (flo == 0.0) return lo;
    lo = 0.0;
    flo = f(lo);
  }
  if (fhi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(), max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

double implied_vol_otm(double call_price, double forward, double strike, double T,
                       double discount) {
  if (strike >= forward) {
    return implied_vol(call_price, forward, strike, T, discount, OptionSide::Call);
  }
  return implied_vol(put_from_parity(call_price, forward, discount, strike), forward, strike, T,
                     discount, OptionSide::Put);
}

}  // namespace ats
