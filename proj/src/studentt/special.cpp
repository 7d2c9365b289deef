#include "palmkit/studentt/special.hpp"

#include <cmath>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

// Lanczos coefficients for g = 7.
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

double lanczos_lgamma(double z) {
  // valid for z >= 0.5
  double sum = kLanczos[0];
  for (int i = 1; i < 9; ++i) sum += kLanczos[i] / (z - 1.0 + i);
  const double base = z + 6.5;
  return kHalfLog2Pi + (z - 0.5) * std::log(base) - base + std::log(sum);
}

}  // namespace

double lgamma_pos(double x) {
  if (!(x > 0.0)) throw ConfigError("lgamma_pos: x must be positive");
  if (x < 0.5) {
    // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
    return std::log(kPi / std::sin(kPi * x)) - lanczos_lgamma(1.0 - x);
  }
  return lanczos_lgamma(x);
}

double digamma(double x) {
  if (!(x > 0.0)) throw ConfigError("digamma: x must be positive");
  double acc = 0.0;
  while (x < 8.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double u = 1.0 / (x * x);
  const double series =
      u * (1.0 / 12.0 -
           u * (1.0 / 120.0 -
                u * (1.0 / 252.0 -
                     u * (1.0 / 240.0 -
                          u * (1.0 / 132.0 - u * (691.0 / 32760.0))))));
  return acc + std::log(x) - 0.5 / x - series;
}

}  // namespace palmkit
