#include "conclab/spotlight.hpp"

#include "conclab/bump.hpp"
#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace conclab::spotlight {

using geometry::Frame;

void check_exponent(double p, int dim) {
  if (!(p >= 2.0)) fail(ErrorCode::UnsupportedExponent, "p must be at least 2");
  if (dim >= 3) {
    const double crit = 2.0 * dim / (dim - 2.0);
    if (!(p < crit)) fail(ErrorCode::UnsupportedExponent, "p must be below the critical exponent 2N/(N-2)");
  }
}

double default_exponent(int dim) {
  if (dim <= 2) return 4.0;
  const double crit = 2.0 * dim / (dim - 2.0);
  return 0.5 * (2.0 + crit);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cell_volume(const Lattice& lat) { return std::pow(lat.spacing(), lat.dim()); }

}  // namespace

ChartSampler::ChartSampler(const PartitionOfUnity& pou, double spacing)
    : pou_(&pou), lattice_(pou.spec().dim, pou.rho(), spacing, false) {}

const ChartData& ChartSampler::chart(std::size_t y) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(y);
  if (it == cache_.end()) it = cache_.emplace(y, build(y)).first;
  return *it->second;
}

std::size_t ChartSampler::cached_charts() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

void ChartSampler::clear() const {
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.clear();
}

std::unique_ptr<ChartData> ChartSampler::build(std::size_t y) const {
  const auto& spec = pou_->spec();
  const auto& disc = pou_->disc();
  if (y >= disc.size()) fail(ErrorCode::NotInDiscretization, "chart index outside Y");
  const int n = spec.dim;
  const std::size_t nn = static_cast<std::size_t>(n);
  const double rho = pou_->rho();
  const Frame& frame = pou_->frame(y);
  auto c = std::make_unique<ChartData>();
  c->center = y;
  const std::size_t size = lattice_.size();
  c->points.assign(size * nn, kNaN);
  c->volume.assign(size, 0.0);
  c->inv_metric.assign(size * nn * nn, 0.0);
  c->metric.assign(size * nn * nn, 0.0);
  c->self_weight.assign(size, 0.0);
  c->offsets.assign(size + 1, 0);

  std::map<std::size_t, geometry::LogWarmStart> warm;
  std::vector<ChartNeighbor> local;
  std::size_t next_active = 0;
  const auto& active = lattice_.active();
  for (std::size_t idx = 0; idx < size; ++idx) {
    c->offsets[idx] = static_cast<std::uint32_t>(c->neighbors.size());
    if (next_active >= active.size() || active[next_active] != idx) continue;
    ++next_active;
    const Vec xi = lattice_.point(idx);
    const Vec x = geometry::shoot(spec, frame, xi);
    for (int m = 0; m < n; ++m) c->points[idx * nn + static_cast<std::size_t>(m)] = x[m];
    const Mat gt = geometry::pullback_metric(spec, frame, xi);
    c->volume[idx] = std::sqrt(gt.determinant());
    const Mat gi = gt.inverse();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        c->inv_metric[idx * nn * nn + static_cast<std::size_t>(a * n + b)] = gi(a, b);
        c->metric[idx * nn * nn + static_cast<std::size_t>(a * n + b)] = gt(a, b);
      }

    local.clear();
    double total = 0.0;
    for (std::size_t id : disc.candidates_within(spec, x, rho)) {
      Vec coords;
      if (id == y) {
        coords = xi;
      } else {
        try {
          coords = geometry::log_map(spec, pou_->frame(id), x, warm[id]);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) continue;
          throw;
        }
      }
      const double w = bump(coords.norm() / rho);
      if (w <= 0.0) continue;
      ChartNeighbor nb;
      nb.center = static_cast<std::uint32_t>(id);
      nb.weight = w;
      for (int m = 0; m < n; ++m) nb.coords[static_cast<std::size_t>(m)] = coords[m];
      local.push_back(nb);
      total += w;
    }
    if (total <= 0.0) fail(ErrorCode::CoveringGap, "chart point not covered by any chart ball");
    for (auto& nb : local) {
      nb.weight /= total;
      if (nb.center == y) c->self_weight[idx] = nb.weight;
      c->neighbors.push_back(nb);
    }
  }
  c->offsets[size] = static_cast<std::uint32_t>(c->neighbors.size());
  return c;
}

std::vector<double> ChartSampler::sample(std::size_t y, const ScalarFn& u) const {
  const ChartData& c = chart(y);
  const int n = lattice_.dim();
  std::vector<double> out(lattice_.size(), kNaN);
  Vec x(n);
  for (std::size_t idx : lattice_.active()) {
    for (int m = 0; m < n; ++m) x[m] = c.points[idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(m)];
    out[idx] = u(x);
  }
  return out;
}

GridFunction ChartSampler::pullback(std::size_t y, const ScalarFn& u) const {
  GridFunction f;
  f.lattice = lattice_;
  f.values = sample(y, u);
  return f;
}

std::vector<std::size_t> ChartSampler::charts_meeting(const std::vector<SupportBall>& balls) const {
  const auto& spec = pou_->spec();
  const auto& disc = pou_->disc();
  std::vector<std::size_t> out;
  for (const auto& b : balls) {
    const double reach = geometry::coordinate_radius_bound(spec, b.center, pou_->rho());
    std::vector<std::size_t> ids;
    if (!std::isfinite(reach)) {
      ids.resize(disc.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    } else {
      for (std::size_t i = 0; i < disc.size(); ++i) {
        if ((disc.points[i] - b.center).norm() < b.radius + reach) ids.push_back(i);
      }
    }
    out.insert(out.end(), ids.begin(), ids.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GridFunction pullback(const ScalarFn& u, const ManifoldSpec& spec, const Frame& frame, double radius,
                      double spacing) {
  if (!(radius < spec.chart_radius())) fail(ErrorCode::InvalidArgument, "pullback radius must be below a");
  GridFunction f;
  f.lattice = Lattice(spec.dim, radius, spacing, false);
  f.values.assign(f.lattice.size(), kNaN);
  for (std::size_t idx : f.lattice.active()) {
    f.values[idx] = u(geometry::shoot(spec, frame, f.lattice.point(idx)));
  }
  return f;
}

std::vector<double> grid_gradient(const Lattice& lat, std::span<const double> values) {
  const int n = lat.dim();
  std::vector<double> g(lat.size() * static_cast<std::size_t>(n), kNaN);
  for (std::size_t idx : lat.active()) {
    for (int m = 0; m < n; ++m) {
      double d;
      if (lattice_derivative(lat, values, 1, {}, idx, m, &d)) {
        g[idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(m)] = d;
      }
    }
  }
  return g;
}

TestBank::TestBank(const Lattice& lattice, double rho, double p) : lattice_(lattice), p_(p) {
  const int n = lattice.dim();
  const double dv = cell_volume(lattice);
  const double pd = p / (p - 1.0);
  for (double scale : {rho / 2.0, rho / 3.0, rho / 4.0}) {
    const double step = scale / 2.0;
    const int zmax = static_cast<int>(std::ceil(rho / step));
    const int w = 2 * zmax + 1;
    int total = 1;
    for (int m = 0; m < n; ++m) total *= w;
    for (int t = 0; t < total; ++t) {
      int rem = t;
      Vec c(n);
      for (int m = n - 1; m >= 0; --m) {
        c[m] = (rem % w - zmax) * step;
        rem /= w;
      }
      if (c.norm() + scale >= rho * (1.0 - 1e-9)) continue;
      TestFunction tf;
      tf.scale = scale;
      tf.center = c;
      double norm2 = 0.0;
      std::vector<double> lap;
      for (std::size_t idx : lattice.active()) {
        const Vec xi = lattice.point(idx);
        const Vec d = xi - c;
        const double r = d.norm();
        const double s = r / scale;
        if (s >= 1.0) continue;
        const double b = bump(s);
        const double b1 = bump_d1(s), b2 = bump_d2(s);
        tf.support.push_back(idx);
        tf.values.push_back(b);
        for (int m = 0; m < n; ++m) tf.grads.push_back(r > 0.0 ? b1 / scale * d[m] / r : 0.0);
        // Radial Laplacian b''/s^2 + (N-1) b'/(r s); at r = 0 it is N b''(0)/s^2.
        const double l = r > 0.0 ? b2 / (scale * scale) + (n - 1) * b1 / (scale * r)
                                 : n * bump_d2(0.0) / (scale * scale);
        lap.push_back(l);
        norm2 += b * b + (b1 / scale) * (b1 / scale);
      }
      norm2 *= dv;
      if (tf.support.empty() || !(norm2 > 0.0)) continue;
      const double inv = 1.0 / std::sqrt(norm2);
      double dual = 0.0;
      for (std::size_t i = 0; i < tf.values.size(); ++i) {
        tf.values[i] *= inv;
        lap[i] *= inv;
        dual += std::pow(std::abs(tf.values[i] - lap[i]), pd);
      }
      for (double& g : tf.grads) g *= inv;
      tf.dual_norm = std::pow(dual * dv, 1.0 / pd);
      constant_ = std::max(constant_, tf.dual_norm);
      elements_.push_back(std::move(tf));
    }
  }
}

namespace {

double pairing_with(const Lattice& lat, std::span<const double> f, std::span<const double> grad,
                    const TestFunction& t, MetricView metric) {
  const int n = lat.dim();
  const std::size_t nn = static_cast<std::size_t>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < t.support.size(); ++i) {
    const std::size_t idx = t.support[i];
    const double fv = f[idx];
    if (std::isnan(fv)) continue;
    const double* gf = grad.data() + idx * nn;
    const double* gt = t.grads.data() + i * nn;
    double dot = 0.0;
    if (metric.inv_metric) {
      const double* gi = metric.inv_metric + idx * nn * nn;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) dot += gf[a] * gi[a * n + b] * gt[b];
    } else {
      for (int a = 0; a < n; ++a) dot += gf[a] * gt[a];
    }
    if (std::isnan(dot)) dot = 0.0;
    const double vol = metric.volume ? metric.volume[idx] : 1.0;
    s += (fv * t.values[i] + dot) * vol;
  }
  return s * cell_volume(lat);
}

}  // namespace

double weak_pairing(const GridFunction& f, const TestFunction& t, MetricView metric) {
  const auto grad = grid_gradient(f.lattice, f.values);
  return pairing_with(f.lattice, f.values, grad, t, metric);
}

std::vector<double> bank_pairings(const Lattice& lat, std::span<const double> f, const TestBank& bank,
                                  MetricView metric) {
  if (!lat.same_as(bank.lattice())) fail(ErrorCode::LatticeMismatch, "bank and function lattices differ");
  const auto grad = grid_gradient(lat, f);
  std::vector<double> out;
  out.reserve(bank.size());
  for (const auto& t : bank.elements()) out.push_back(pairing_with(lat, f, grad, t, metric));
  return out;
}

double grid_h12_square(const Lattice& lat, std::span<const double> f, MetricView metric) {
  const int n = lat.dim();
  const std::size_t nn = static_cast<std::size_t>(n);
  const auto grad = grid_gradient(lat, f);
  double s = 0.0;
  for (std::size_t idx : lat.active()) {
    const double fv = f[idx];
    if (std::isnan(fv)) continue;
    const double* g = grad.data() + idx * nn;
    double q = 0.0;
    for (int a = 0; a < n; ++a) {
      if (std::isnan(g[a])) continue;
      if (metric.inv_metric) {
        const double* gi = metric.inv_metric + idx * nn * nn;
        for (int b = 0; b < n; ++b)
          if (!std::isnan(g[b])) q += g[a] * gi[a * n + b] * g[b];
      } else {
        q += g[a] * g[a];
      }
    }
    s += (fv * fv + q) * (metric.volume ? metric.volume[idx] : 1.0);
  }
  return s * cell_volume(lat);
}

std::string to_string(LimitStatus s) {
  switch (s) {
    case LimitStatus::Converged: return "converged";
    case LimitStatus::Zero: return "zero";
    case LimitStatus::Undetermined: return "undetermined";
  }
  return "undetermined";
}

WeakLimit weak_limit(const std::vector<GridFunction>& seq, const std::vector<MetricView>& metrics,
                     const TestBank& bank, double tol_w) {
  if (seq.size() < 4) fail(ErrorCode::InvalidArgument, "weak_limit needs at least 4 samples");
  if (!metrics.empty() && metrics.size() != seq.size()) {
    fail(ErrorCode::InvalidArgument, "one metric view per sample is required");
  }
  const Lattice& lat = seq.front().lattice;
  for (const auto& f : seq) {
    if (!f.lattice.same_as(lat)) fail(ErrorCode::LatticeMismatch, "samples on different lattices");
  }
  WeakLimit out;
  std::vector<std::vector<double>> P;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const MetricView mv = metrics.empty() ? MetricView{} : metrics[k];
    out.scale = std::max(out.scale, std::sqrt(grid_h12_square(lat, seq[k].values, mv)));
    P.push_back(bank_pairings(lat, seq[k].values, bank, mv));
  }
  const std::size_t K = seq.size();
  // Bank elements have unit norm, so the threshold is tol_w * ||t|| * scale.
  const double tau = tol_w * out.scale;
  double last_max = 0.0, prev_max = 0.0;
  for (std::size_t t = 0; t < bank.size(); ++t) {
    last_max = std::max(last_max, std::abs(P[K - 1][t]));
    prev_max = std::max(prev_max, std::abs(P[K - 2][t]));
    out.max_increment = std::max({out.max_increment, std::abs(P[K - 1][t] - P[K - 2][t]),
                                  std::abs(P[K - 2][t] - P[K - 3][t]), std::abs(P[K - 1][t] - P[K - 3][t])});
  }
  out.final_pairing = last_max;
  if (out.scale == 0.0 || (last_max <= tau && prev_max <= tau)) {
    out.status = LimitStatus::Zero;
    out.limit = GridFunction::zeros(lat);
    return out;
  }
  out.status = out.max_increment <= tau ? LimitStatus::Converged : LimitStatus::Undetermined;
  out.limit = seq.back();
  return out;
}

double chart_lp_power(const ChartSampler& s, std::size_t y, std::span<const double> f, double p) {
  const ChartData& c = s.chart(y);
  const Lattice& lat = s.lattice();
  double acc = 0.0;
  for (std::size_t idx : lat.active()) {
    const double w = c.self_weight[idx];
    if (w == 0.0 || f[idx] == 0.0) continue;
    acc += w * std::pow(std::abs(f[idx]), p) * c.volume[idx];
  }
  return acc * cell_volume(lat);
}

double chart_h12_square(const ChartSampler& s, std::size_t y, std::span<const double> f) {
  const ChartData& c = s.chart(y);
  const Lattice& lat = s.lattice();
  const int n = lat.dim();
  const std::size_t nn = static_cast<std::size_t>(n);
  const auto grad = grid_gradient(lat, f);
  double acc = 0.0;
  for (std::size_t idx : lat.active()) {
    const double w = c.self_weight[idx];
    if (w == 0.0) continue;
    const double* g = grad.data() + idx * nn;
    const double* gi = c.inv_metric.data() + idx * nn * nn;
    double q = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) q += g[a] * gi[a * n + b] * g[b];
    if (std::isnan(q)) q = 0.0;
    acc += w * (f[idx] * f[idx] + q) * c.volume[idx];
  }
  return acc * cell_volume(lat);
}

namespace {

std::vector<std::size_t> all_or(const ChartSampler& s, const std::vector<std::size_t>& charts) {
  if (!charts.empty()) return charts;
  std::vector<std::size_t> all(s.disc().size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

}  // namespace

double lp_norm_M(const ChartSampler& s, const ScalarFn& u, double p, const std::vector<std::size_t>& charts) {
  check_exponent(p, s.lattice().dim());
  double acc = 0.0;
  for (std::size_t y : all_or(s, charts)) acc += chart_lp_power(s, y, s.sample(y, u), p);
  return std::pow(acc, 1.0 / p);
}

double h12_norm_M(const ChartSampler& s, const ScalarFn& u, const std::vector<std::size_t>& charts) {
  double acc = 0.0;
  for (std::size_t y : all_or(s, charts)) acc += chart_h12_square(s, y, s.sample(y, u));
  return std::sqrt(acc);
}

SpotlightVerdict spotlight_test(const SequenceFamily& family, const ChartSampler& sampler,
                                const TestBank& bank, const std::vector<int>& k_schedule, double p,
                                double tol) {
  check_exponent(p, sampler.lattice().dim());
  SpotlightVerdict v;
  v.k_schedule = k_schedule;
  v.bank_constant = bank.constant();
  const auto& disc = sampler.disc();
  for (int k : k_schedule) {
    const ScalarFn u = [&family, k](const Vec& x) { return family.generator(k, x); };
    std::vector<std::size_t> charts;
    std::optional<std::size_t> tracked;
    if (family.support_hint) {
      const auto balls = family.support_hint(k);
      charts = sampler.charts_meeting(balls);
      if (!balls.empty()) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < disc.size(); ++i) {
          const double d = (disc.points[i] - balls.front().center).norm();
          if (d < best) {
            best = d;
            tracked = i;
          }
        }
      }
    } else {
      charts = all_or(sampler, {});
    }
    double lp = 0.0, best = 0.0, tracked_val = 0.0;
    for (std::size_t y : charts) {
      const auto f = sampler.sample(y, u);
      lp += chart_lp_power(sampler, y, f, p);
      const auto P = bank_pairings(sampler.lattice(), f, bank, MetricView::of(sampler.chart(y)));
      double m = 0.0;
      for (double q : P) m = std::max(m, std::abs(q));
      best = std::max(best, m);
      if (tracked && *tracked == y) tracked_val = m;
    }
    lp = std::pow(lp, 1.0 / p);
    v.lp_norms.push_back(lp);
    v.max_pairings.push_back(best);
    v.tracked_pairings.push_back(tracked_val);
    v.soundness_ratio.push_back(lp > 0.0 ? best / (lp * bank.constant()) : 0.0);
  }
  auto decays = [tol](const std::vector<double>& xs) {
    const double peak = *std::max_element(xs.begin(), xs.end());
    if (peak == 0.0) return true;
    return xs.back() < tol * peak;
  };
  v.lp_decays = decays(v.lp_norms);
  v.pairings_small = decays(v.max_pairings);
  v.consistent = v.lp_decays == v.pairings_small;
  return v;
}

}  // namespace conclab::spotlight
