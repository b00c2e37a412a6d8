#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>

namespace conclab {

// Largest supported manifold dimension. Small fixed-capacity Eigen types avoid
// heap traffic in the geodesic inner loops.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

// Partial derivatives of the metric: d[m](a, b) = d g_ab / d x^m.
struct MetricGrad {
  std::array<Mat, kMaxDim> d;
};

inline Vec zero_vec(int n) { return Vec::Zero(n); }

}  // namespace conclab
