#pragma once

namespace conclab {

// Standard mollifier profile b(s) = exp(1 - 1/(1 - s^2)) on |s| < 1, zero
// elsewhere. Normalized so that b(0) = 1.
double bump(double s);
double bump_d1(double s);
double bump_d2(double s);

}  // namespace conclab
