#pragma once

#include "conclab/manifold.hpp"

#include <span>

namespace conclab::geometry {

struct IntegrationStats {
  int steps = 0;
  int rejected = 0;
  double energy_drift = 0.0;  // |E(1) - E(0)| / E(0) with E = g(v, v)
};

struct GeodesicState {
  Vec position;
  Vec velocity;
};

// Integrates the geodesic equation from (x, v) over t in [0, t_end] with an
// adaptive Dormand-Prince 5(4) scheme.
GeodesicState integrate_geodesic(const ManifoldSpec& spec, const Vec& x, const Vec& v,
                                 double t_end = 1.0, IntegrationStats* stats = nullptr);

// Endpoint of the geodesic with initial velocity basis * xi, no radius check.
Vec shoot(const ManifoldSpec& spec, const Frame& frame, const Vec& xi);

// Normal-coordinate chart e_y(xi); requires |xi| < a.
Vec exp_map(const ManifoldSpec& spec, const Frame& frame, const Vec& xi);

// Warm-start state for sweeps of log over nearby targets.
struct LogWarmStart {
  Vec target;
  Vec xi;
  Mat jacobian;
  bool valid = false;
};

// Inverse of the chart; throws OutsideInjectivity when d(base, y) >= r(M),
// NoConvergence when Newton fails.
Vec log_map(const ManifoldSpec& spec, const Frame& frame, const Vec& y);
Vec log_map(const ManifoldSpec& spec, const Frame& frame, const Vec& y, LogWarmStart& warm);

// Geodesic distance. Uses the log map when possible and otherwise a shortest
// path over graph_nodes with edges shorter than r(M).
double geodesic_distance(const ManifoldSpec& spec, const Vec& x, const Vec& y,
                         std::span<const Vec> graph_nodes = {});

// Differential of xi -> e_y(xi) by central differences (columns d/dxi_m).
Mat exp_differential(const ManifoldSpec& spec, const Frame& frame, const Vec& xi, double step = 1e-5);

// Pullback metric (d e_y)^T g (d e_y) at xi.
Mat pullback_metric(const ManifoldSpec& spec, const Frame& frame, const Vec& xi, double step = 1e-5);

}  // namespace conclab::geometry
