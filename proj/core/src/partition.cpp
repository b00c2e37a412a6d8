#include "conclab/partition.hpp"

#include "conclab/bump.hpp"
#include "conclab/error.hpp"

#include <cmath>

namespace conclab::profiles {

using geometry::log_map;
using geometry::make_frame;

PartitionOfUnity::PartitionOfUnity(const ManifoldSpec& spec, const Discretization& disc, double rho)
    : spec_(&spec), disc_(&disc), rho_(rho) {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidArgument, "rho must be positive");
  frames_.reserve(disc.size());
  for (const Vec& y : disc.points) frames_.push_back(make_frame(spec, y));
}

std::vector<ChartWeight> PartitionOfUnity::evaluate(const Vec& x) const {
  std::vector<ChartWeight> out;
  double total = 0.0;
  for (std::size_t id : disc_->candidates_within(*spec_, x, rho_)) {
    Vec xi;
    try {
      xi = log_map(*spec_, frames_[id], x);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) continue;
      throw;
    }
    const double w = bump(xi.norm() / rho_);
    if (w <= 0.0) continue;
    out.push_back({id, w, xi});
    total += w;
  }
  if (total <= 0.0) fail(ErrorCode::CoveringGap, "point not covered by any chart ball");
  for (auto& cw : out) cw.value /= total;
  return out;
}

double PartitionOfUnity::weight(std::size_t y, const Vec& x) const {
  for (const auto& cw : evaluate(x))
    if (cw.center == y) return cw.value;
  return 0.0;
}

PartitionCheck check_partition(const PartitionOfUnity& pou, std::span<const Vec> test_points) {
  PartitionCheck chk;
  const auto& spec = pou.spec();
  const int n = spec.dim;
  const double step = 1e-5;
  for (const Vec& x : test_points) {
    const auto ws = pou.evaluate(x);
    double s = 0.0;
    for (const auto& cw : ws) s += cw.value;
    chk.max_sum_error = std::max(chk.max_sum_error, std::abs(s - 1.0));
    const Mat ginv = geometry::metric_at(spec, x).inverse();
    std::vector<Vec> grads(ws.size(), Vec::Zero(n));
    for (int m = 0; m < n; ++m) {
      Vec xp = x, xm = x;
      xp[m] += step;
      xm[m] -= step;
      const auto wp = pou.evaluate(xp);
      const auto wm = pou.evaluate(xm);
      auto value_of = [](const std::vector<ChartWeight>& v, std::size_t c) {
        for (const auto& cw : v)
          if (cw.center == c) return cw.value;
        return 0.0;
      };
      for (std::size_t q = 0; q < ws.size(); ++q) {
        grads[q][m] = (value_of(wp, ws[q].center) - value_of(wm, ws[q].center)) / (2.0 * step);
      }
    }
    for (const Vec& g : grads) {
      chk.max_gradient = std::max(chk.max_gradient, std::sqrt(std::max(0.0, g.dot(ginv * g))));
    }
    ++chk.test_points;
  }
  return chk;
}

PartitionOfUnity build_partition(const ManifoldSpec& spec, const Discretization& disc, double rho,
                                 double test_spacing) {
  PartitionOfUnity pou(spec, disc, rho);
  if (test_spacing < 0.0) return pou;
  const double s = test_spacing > 0.0 ? test_spacing : disc.epsilon / 2.0;
  // Every region test point is checked for coverage; the derivative bound is
  // sampled on at most about 200 of them.
  std::vector<Vec> pts;
  const auto& reg = disc.region;
  const int n = spec.dim;
  if (reg.kind == discretization::Region::Kind::Box) {
    std::array<long long, kMaxDim> cnt{};
    long long total = 1;
    for (int m = 0; m < n; ++m) {
      cnt[static_cast<std::size_t>(m)] = static_cast<long long>(std::floor((reg.hi[m] - reg.lo[m]) / s + 1e-9)) + 1;
      total *= cnt[static_cast<std::size_t>(m)];
    }
    for (long long t = 0; t < total; ++t) {
      long long rem = t;
      Vec p(n);
      for (int m = n - 1; m >= 0; --m) {
        p[m] = reg.lo[m] + static_cast<double>(rem % cnt[static_cast<std::size_t>(m)]) * s;
        rem /= cnt[static_cast<std::size_t>(m)];
      }
      if (spec.contains(p)) pts.push_back(p);
    }
  } else {
    pts.push_back(reg.center);
  }
  std::vector<Vec> sub;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 200);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pou.evaluate(pts[i]);
    if (i % stride == 0) sub.push_back(pts[i]);
  }
  pou.derivative_bound = check_partition(pou, sub).max_gradient;
  return pou;
}

}  // namespace conclab::profiles
