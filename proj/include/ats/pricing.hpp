#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ats/models.hpp"

namespace ats {

enum class OptionSide { Call, Put };

struct OptionSpec {
  double expiry = 0.0;
  double strike = 0.0;
  OptionSide side = OptionSide::Call;

  void validate() const;
};

enum class QuadratureScheme {
  Trapezoid,     // equispaced nodes on the real line, folded onto z >= 0
  GaussLegendre  // composite 8-point Gauss-Legendre panels of width 4 * step
};

/// Numerical settings of the Lewis integral. The node spacing is
/// truncation / nodes; the range is then widened (or narrowed) in powers of
/// two until the integrand envelope at the endpoint drops below
/// tail_tolerance.
struct QuadratureConfig {
  double truncation = 200.0;
  int nodes = 2048;
  QuadratureScheme scheme = QuadratureScheme::Trapezoid;
  double tail_tolerance = 1e-12;
  double max_truncation = 204800.0;
  double min_truncation = 25.0;

  void validate() const;
  double step() const { return truncation / nodes; }
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InversionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Characteristic function of the forward exponent f_T.
using CharacteristicFunction = std::function<Complex(Complex)>;

CharacteristicFunction make_cf(const TemperedStableSlice& slice);
CharacteristicFunction make_black_cf(double sigma, double T);

/// Undiscounted-forward call prices by the Lewis formula for a batch of
/// strikes sharing one characteristic function; CF nodes are evaluated once.
std::vector<double> lewis_call_prices(const CharacteristicFunction& cf, double forward,
                                      double discount, std::span<const double> strikes,
                                      const QuadratureConfig& q = {});

double lewis_call(const CharacteristicFunction& cf, double forward, double discount,
                  double strike, const QuadratureConfig& q = {});

/// Call or put according to spec.side; puts from parity.
double lewis_price(const CharacteristicFunction& cf, double forward, double discount,
                   const OptionSpec& spec, const QuadratureConfig& q = {});

double put_from_parity(double call, double forward, double discount, double strike);
double call_from_parity(double put, double forward, double discount, double strike);

/// Black-76 price times the discount factor.
double black_price(double forward, double strike, double T, double sigma, double discount,
                   OptionSide side);

/// Black implied volatility. Throws InversionError when the price is outside
/// the no-arbitrage bounds or above the sigma = 5 bracket.
double implied_vol(double price, double forward, double strike, double T, double discount,
                   OptionSide side);

/// Implied volatility read from the out-of-the-money side given a call price.
double implied_vol_otm(double call_price, double forward, double strike, double T,
                       double discount);

}  // namespace ats
