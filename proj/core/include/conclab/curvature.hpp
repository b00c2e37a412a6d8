#pragma once

#include "conclab/manifold.hpp"

#include <span>
#include <string>
#include <vector>

namespace conclab::geometry {

// Riemann tensor R_ijkl = g(R(d_i, d_j) d_k, d_l), flattened row-major (N^4).
std::vector<double> riemann_lower(const ManifoldSpec& spec, const Vec& x);

// Sectional curvature of the coordinate plane (a, b).
double sectional_curvature(const ManifoldSpec& spec, const Vec& x, int a, int b);

struct CurvatureReport {
  double max_riemann = 0.0;       // sup |Rm|_g over samples
  double max_riemann_grad = 0.0;  // sup |nabla Rm|_g over samples
  double min_sectional = 0.0;
  double max_sectional = 0.0;
  std::size_t samples = 0;
  bool declared_ok = true;
  std::vector<std::string> flags;
};

// Finite-difference curvature estimates, compared with any declared bounds
// (a flag is raised when an estimate exceeds a declared bound by > 10%).
CurvatureReport validate_bounded_geometry(const ManifoldSpec& spec, std::span<const Vec> samples);

}  // namespace conclab::geometry
