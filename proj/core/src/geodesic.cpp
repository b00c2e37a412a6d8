#include "conclab/geodesic.hpp"

#include "conclab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace conclab::geometry {

namespace {

struct OutOfDomain {};

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

StateVec rhs(const ManifoldSpec& spec, const StateVec& s) {
  const int n = spec.dim;
  const Vec x = s.head(n);
  if (!spec.contains(x) || !x.allFinite()) throw OutOfDomain{};
  const Vec v = s.tail(n);
  StateVec out(2 * n);
  out.head(n) = v;
  out.tail(n) = geodesic_acceleration(spec, x, v);
  return out;
}

bool shortcut(const ManifoldSpec& spec, const Vec& a, const Vec& b) {
  return spec.numerics.use_euclidean_shortcut && spec.euclidean_segment &&
         spec.euclidean_segment(a, b);
}

Mat shoot_jacobian(const ManifoldSpec& spec, const Frame& frame, const Vec& xi) {
  const int n = spec.dim;
  const double d = spec.numerics.jacobian_step * std::max(1.0, xi.norm());
  Mat J(n, n);
  for (int m = 0; m < n; ++m) {
    Vec xp = xi, xm = xi;
    xp[m] += d;
    xm[m] -= d;
    J.col(m) = (shoot(spec, frame, xp) - shoot(spec, frame, xm)) / (2.0 * d);
  }
  return J;
}

}  // namespace

GeodesicState integrate_geodesic(const ManifoldSpec& spec, const Vec& x, const Vec& v,
                                 double t_end, IntegrationStats* stats) {
  const int n = spec.dim;
  const auto& opt = spec.numerics;
  if (!spec.contains(x)) fail(ErrorCode::DomainEscape, "initial point outside the chart domain");
  StateVec s(2 * n);
  s.head(n) = x;
  s.tail(n) = v;
  IntegrationStats local;
  const double e0 = v.dot(metric_at(spec, x) * v);
  if (v.norm() == 0.0 || t_end == 0.0) {
    if (stats) *stats = local;
    return {x, v};
  }

  double t = 0.0;
  double h = t_end;
  StateVec k1 = rhs(spec, s);
  int total = 0;
  bool escaped_last = false;
  while (t < t_end) {
    if (++total > opt.max_steps) {
      fail(ErrorCode::IntegrationFailure, "geodesic integration exceeded the step budget");
    }
    if (t + h > t_end) h = t_end - t;
    if (h < 1e-14 * std::max(1.0, t_end)) {
      if (escaped_last) fail(ErrorCode::DomainEscape, "geodesic left the coordinate domain");
      fail(ErrorCode::IntegrationFailure, "step size underflow in geodesic integration");
    }
    StateVec k2, k3, k4, k5, k6, k7, s5;
    try {
      k2 = rhs(spec, s + h * (a21 * k1));
      k3 = rhs(spec, s + h * (a31 * k1 + a32 * k2));
      k4 = rhs(spec, s + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = rhs(spec, s + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = rhs(spec, s + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      s5 = s + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = rhs(spec, s5);
    } catch (const OutOfDomain&) {
      escaped_last = true;
      h *= 0.25;
      ++local.rejected;
      continue;
    }
    escaped_last = false;
    const StateVec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int i = 0; i < 2 * n; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(s[i]), std::abs(s5[i]));
      en = std::max(en, std::abs(err[i]) / sc);
    }
    if (!std::isfinite(en)) {
      h *= 0.25;
      ++local.rejected;
      continue;
    }
    if (en <= 1.0) {
      t += h;
      s = s5;
      k1 = k7;
      ++local.steps;
      const double fac = en == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h *= fac;
    } else {
      ++local.rejected;
      h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
    }
  }
  GeodesicState out{s.head(n), s.tail(n)};
  if (stats) {
    const double e1v = out.velocity.dot(metric_at(spec, out.position) * out.velocity);
    local.energy_drift = e0 > 0.0 ? std::abs(e1v - e0) / e0 : 0.0;
    *stats = local;
  }
  return out;
}

Vec shoot(const ManifoldSpec& spec, const Frame& frame, const Vec& xi) {
  const Vec v = frame.basis * xi;
  const Vec straight = frame.base + v;
  if (shortcut(spec, frame.base, straight)) return straight;
  return integrate_geodesic(spec, frame.base, v).position;
}

Vec exp_map(const ManifoldSpec& spec, const Frame& frame, const Vec& xi) {
  if (xi.norm() >= spec.chart_radius()) {
    fail(ErrorCode::OutsideInjectivity, "chart argument outside the ball of radius a");
  }
  return shoot(spec, frame, xi);
}

Vec log_map(const ManifoldSpec& spec, const Frame& frame, const Vec& y) {
  LogWarmStart none;
  return log_map(spec, frame, y, none);
}

Vec log_map(const ManifoldSpec& spec, const Frame& frame, const Vec& y, LogWarmStart& warm) {
  const auto& opt = spec.numerics;
  const int n = spec.dim;
  const double inj = spec.inj_radius;
  const Vec& x = frame.base;
  const Vec dx = y - x;
  if (dx.norm() == 0.0) return Vec::Zero(n);
  const double cbound = coordinate_radius_bound(spec, x, inj);
  if (dx.norm() >= cbound) fail(ErrorCode::OutsideInjectivity, "target beyond the injectivity radius");

  const Vec flat_guess = frame.inverse * dx;
  if (shortcut(spec, x, y)) {
    if (flat_guess.norm() >= inj) fail(ErrorCode::OutsideInjectivity, "target beyond the injectivity radius");
    return flat_guess;
  }

  const double tol = opt.newton_tol * std::max(1.0, y.norm());
  Vec xi;
  Mat J;
  bool have_jacobian = false;
  bool jacobian_fresh = false;
  if (warm.valid && warm.xi.size() == n && warm.jacobian.rows() == n) {
    J = warm.jacobian;
    xi = warm.xi + J.partialPivLu().solve(y - warm.target);
    have_jacobian = true;
    if (!xi.allFinite() || xi.norm() >= inj) xi = flat_guess;
  } else {
    xi = flat_guess;
  }

  auto residual = [&](const Vec& trial, Vec& r) -> double {
    try {
      r = shoot(spec, frame, trial) - y;
      return r.allFinite() ? r.norm() : std::numeric_limits<double>::infinity();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DomainEscape || e.code() == ErrorCode::IntegrationFailure) {
        return std::numeric_limits<double>::infinity();
      }
      throw;
    }
  };

  Vec r;
  double rn = residual(xi, r);
  if (!std::isfinite(rn)) {
    xi = flat_guess;
    rn = residual(xi, r);
    have_jacobian = false;
    if (!std::isfinite(rn)) fail(ErrorCode::NoConvergence, "log map initial guess left the domain");
  }

  for (int it = 0; it < opt.max_newton && rn > tol; ++it) {
    if (!have_jacobian) {
      J = shoot_jacobian(spec, frame, xi);
      have_jacobian = true;
      jacobian_fresh = true;
    }
    const Vec step = J.partialPivLu().solve(-r);
    double lambda = 1.0;
    Vec xi_new, r_new;
    double rn_new = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 30; ++halving) {
      xi_new = xi + lambda * step;
      if (xi_new.norm() < 1.5 * inj) {
        rn_new = residual(xi_new, r_new);
        if (rn_new < rn) break;
      }
      lambda *= 0.5;
    }
    if (!(rn_new < rn)) {
      if (!jacobian_fresh) {
        have_jacobian = false;
        continue;
      }
      fail(ErrorCode::NoConvergence, "log map Newton iteration stalled");
    }
    const Vec s = xi_new - xi;
    const double ss = s.squaredNorm();
    if (ss > 0.0) J += ((r_new - r) - J * s) * s.transpose() / ss;
    jacobian_fresh = false;
    // Slow contraction with an updated Jacobian: refresh it next iteration.
    if (rn_new > 0.25 * rn) have_jacobian = false;
    xi = xi_new;
    r = r_new;
    rn = rn_new;
  }
  if (rn > tol) fail(ErrorCode::NoConvergence, "log map Newton iteration did not converge");
  if (xi.norm() >= inj) fail(ErrorCode::OutsideInjectivity, "target beyond the injectivity radius");
  // A guess that is already within tolerance leaves no Jacobian to reuse.
  warm.valid = J.rows() == n;
  if (warm.valid) {
    warm.target = y;
    warm.xi = xi;
    warm.jacobian = J;
  }
  return xi;
}

double geodesic_distance(const ManifoldSpec& spec, const Vec& x, const Vec& y,
                         std::span<const Vec> graph_nodes) {
  // If g >= delta on the coordinate ball B(x, |y - x|) and the segment is
  // Euclidean, every curve from x to y has length >= |y - x| and the segment
  // attains it.
  const double straight = (y - x).norm();
  if (shortcut(spec, x, y) && spec.local_lower_bound && spec.local_lower_bound(x, straight) >= 1.0) {
    return straight;
  }
  try {
    return log_map(spec, make_frame(spec, x), y).norm();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutsideInjectivity && e.code() != ErrorCode::NoConvergence) throw;
  }
  if (graph_nodes.empty()) fail(ErrorCode::Disconnected, "no graph available for a long-range distance");

  // Dijkstra over {x} + nodes + {y}; edge weights are geodesic lengths below r(M).
  const std::size_t m = graph_nodes.size() + 2;
  auto node = [&](std::size_t i) -> const Vec& {
    if (i == 0) return x;
    if (i == m - 1) return y;
    return graph_nodes[i - 1];
  };
  const double inj = spec.inj_radius;
  std::vector<double> dist(m, std::numeric_limits<double>::infinity());
  std::vector<char> done(m, 0);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[0] = 0.0;
  pq.push({0.0, 0});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (u == m - 1) return du;
    const Vec& pu = node(u);
    const double cb = coordinate_radius_bound(spec, pu, inj);
    Frame fu;
    bool have_frame = false;
    for (std::size_t w = 0; w < m; ++w) {
      if (done[w]) continue;
      const Vec& pw = node(w);
      if ((pw - pu).norm() >= cb) continue;
      if (!have_frame) {
        fu = make_frame(spec, pu);
        have_frame = true;
      }
      double len;
      try {
        len = log_map(spec, fu, pw).norm();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) continue;
        throw;
      }
      if (du + len < dist[w]) {
        dist[w] = du + len;
        pq.push({dist[w], w});
      }
    }
  }
  fail(ErrorCode::Disconnected, "points are not connected by the discretization graph");
}

Mat exp_differential(const ManifoldSpec& spec, const Frame& frame, const Vec& xi, double step) {
  const int n = spec.dim;
  Mat D(n, n);
  for (int m = 0; m < n; ++m) {
    Vec xp = xi, xm = xi;
    xp[m] += step;
    xm[m] -= step;
    D.col(m) = (shoot(spec, frame, xp) - shoot(spec, frame, xm)) / (2.0 * step);
  }
  return D;
}

Mat pullback_metric(const ManifoldSpec& spec, const Frame& frame, const Vec& xi, double step) {
  const Mat D = exp_differential(spec, frame, xi, step);
  const Vec x = shoot(spec, frame, xi);
  const Mat g = metric_at(spec, x);
  Mat gt = D.transpose() * g * D;
  return 0.5 * (gt + gt.transpose());
}

}  // namespace conclab::geometry
