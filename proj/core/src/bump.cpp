#include "conclab/bump.hpp"

#include <cmath>

namespace conclab {

double bump(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / q);
}

double bump_d1(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return 0.0;
  return bump(s) * (-2.0 * s / (q * q));
}

double bump_d2(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return 0.0;
  // b' = b * f with f = -2s/q^2, so b'' = b (f^2 + f').
  const double f = -2.0 * s / (q * q);
  const double df = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  return bump(s) * (f * f + df);
}

}  // namespace conclab
