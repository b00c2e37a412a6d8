#pragma once

#include "conclab/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace conclab::geometry {

struct GeodesicOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  int max_steps = 20000;
  double h_fd = 1e-4;          // metric derivatives when no analytic gradient
  double h_curvature = 1e-3;   // Christoffel derivatives in curvature estimates
  int max_newton = 50;
  double newton_tol = 1e-11;   // residual |exp(xi) - y|, relative to max(1, |y|)
  double jacobian_step = 1e-6; // central-difference step for d exp / d xi
  bool use_euclidean_shortcut = true;
};

struct CurvatureBounds {
  double riemann = 0.0;       // sup |Rm|
  double riemann_grad = 0.0;  // sup |nabla Rm|
};

struct ManifoldSpec {
  int dim = 2;
  std::function<Mat(const Vec&)> metric;
  std::function<MetricGrad(const Vec&)> metric_grad;  // optional
  double inj_radius = 1.0;
  std::optional<CurvatureBounds> curvature_bounds;
  // Lower bound for the smallest eigenvalue of g over a coordinate ball of the
  // given radius. Used only to turn geodesic radii into coordinate radii.
  std::function<double(const Vec&, double)> local_lower_bound;  // optional
  std::function<bool(const Vec&)> in_domain;                    // optional
  // True when g equals the identity on a neighborhood of the straight segment
  // [a, b], so the segment is the geodesic and exp/log are affine there.
  std::function<bool(const Vec&, const Vec&)> euclidean_segment;  // optional
  std::string catalog_id;
  GeodesicOptions numerics;

  double chart_radius() const { return 0.75 * inj_radius; }
  bool contains(const Vec& x) const { return !in_domain || in_domain(x); }
};

// Metric evaluation with SPD check (throws NotSPD).
Mat metric_at(const ManifoldSpec& spec, const Vec& x);
MetricGrad metric_grad_at(const ManifoldSpec& spec, const Vec& x);

// Christoffel symbols of the second kind, gamma[k](i, j) = Gamma^k_ij.
std::array<Mat, kMaxDim> christoffel(const ManifoldSpec& spec, const Vec& x);

// Geodesic acceleration -Gamma^k_ij v^i v^j.
Vec geodesic_acceleration(const ManifoldSpec& spec, const Vec& x, const Vec& v);

// g-orthonormal frame at a point, built by Gram-Schmidt on the coordinate
// basis in index order. Columns of basis are the frame vectors.
struct Frame {
  Vec base;
  Mat basis;
  Mat inverse;
};

Frame make_frame(const ManifoldSpec& spec, const Vec& x);

// Upper bound R such that every point within geodesic distance r of x lies in
// the coordinate ball B(x, R). Infinite when the manifold gives no bound.
double coordinate_radius_bound(const ManifoldSpec& spec, const Vec& x, double r);

}  // namespace conclab::geometry
