#include "conclab/manifold.hpp"

#include "conclab/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace conclab::geometry {

namespace {

std::string describe(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

Mat metric_at(const ManifoldSpec& spec, const Vec& x) {
  Mat g = spec.metric(x);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) {
    fail(ErrorCode::NotSPD, "metric is not positive definite at " + describe(x));
  }
  return g;
}

MetricGrad metric_grad_at(const ManifoldSpec& spec, const Vec& x) {
  if (spec.metric_grad) return spec.metric_grad(x);
  MetricGrad out;
  const double h = spec.numerics.h_fd;
  for (int m = 0; m < spec.dim; ++m) {
    Vec xp = x, xm = x;
    xp[m] += h;
    xm[m] -= h;
    out.d[m] = (spec.metric(xp) - spec.metric(xm)) / (2.0 * h);
  }
  return out;
}

std::array<Mat, kMaxDim> christoffel(const ManifoldSpec& spec, const Vec& x) {
  const int n = spec.dim;
  const Mat g = metric_at(spec, x);
  const Mat ginv = g.inverse();
  const MetricGrad dg = metric_grad_at(spec, x);
  std::array<Mat, kMaxDim> gamma;
  for (int k = 0; k < n; ++k) {
    gamma[k] = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) {
          s += ginv(k, l) * (dg.d[i](l, j) + dg.d[j](l, i) - dg.d[l](i, j));
        }
        gamma[k](i, j) = 0.5 * s;
      }
    }
  }
  return gamma;
}

Vec geodesic_acceleration(const ManifoldSpec& spec, const Vec& x, const Vec& v) {
  const int n = spec.dim;
  const Mat g = spec.metric(x);
  const MetricGrad dg = metric_grad_at(spec, x);
  // w_l = (d_m g_lj) v^m v^j - 1/2 v^T (d_l g) v, acceleration = -g^{-1} w.
  Vec w = Vec::Zero(n);
  Mat dv = Mat::Zero(n, n);
  for (int m = 0; m < n; ++m) dv += v[m] * dg.d[m];
  w = dv * v;
  for (int l = 0; l < n; ++l) w[l] -= 0.5 * v.dot(dg.d[l] * v);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) {
    fail(ErrorCode::NotSPD, "metric is not positive definite at " + describe(x));
  }
  return -llt.solve(w);
}

Frame make_frame(const ManifoldSpec& spec, const Vec& x) {
  const int n = spec.dim;
  const Mat g = metric_at(spec, x);
  Frame f;
  f.base = x;
  f.basis = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    for (int j = 0; j < i; ++j) {
      const Vec bj = f.basis.col(j);
      e -= (bj.dot(g * e)) * bj;
    }
    const double nrm = std::sqrt(e.dot(g * e));
    f.basis.col(i) = e / nrm;
  }
  f.inverse = f.basis.inverse();
  return f;
}

double coordinate_radius_bound(const ManifoldSpec& spec, const Vec& x, double r) {
  if (!spec.local_lower_bound) return std::numeric_limits<double>::infinity();
  // A curve of length < r starting at x stays in B(x, R) as long as
  // R >= r / sqrt(lambda_min over B(x, R)). Grow R until that holds.
  double R = r;
  for (int it = 0; it < 60; ++it) {
    const double lam = spec.local_lower_bound(x, R);
    if (lam <= 0.0) return std::numeric_limits<double>::infinity();
    const double need = r / std::sqrt(lam);
    if (need <= R) return R;
    R = std::max(need, 1.25 * R);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace conclab::geometry
