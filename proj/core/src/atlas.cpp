#include "conclab/atlas.hpp"

#include "conclab/bump.hpp"
#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace conclab::atlas {

using geometry::Frame;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Active lattice indices in row-major order with the last axis reversed on
// alternate rows, so consecutive points are neighbors (warm starts).
std::vector<std::size_t> serpentine(const Lattice& lat) {
  std::vector<std::size_t> out;
  out.reserve(lat.active().size());
  const std::size_t ext = static_cast<std::size_t>(lat.extent());
  const std::size_t rows = lat.size() / ext;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < ext; ++q) {
      const std::size_t c = (r % 2 == 0) ? q : ext - 1 - q;
      const std::size_t idx = r * ext + c;
      if (lat.inside(idx)) out.push_back(idx);
    }
  }
  return out;
}

double local_distance(const ManifoldSpec& spec, const Frame& f, const Vec& y) {
  try {
    return geometry::log_map(spec, f, y).norm();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) return kInf;
    throw;
  }
}

// psi = log_{frame_i} o (precomputed exp points of chart j).
GridMap compose_map(const ManifoldSpec& spec, const Frame& fi, const Lattice& lat,
                    const std::vector<double>& exp_points, const std::vector<std::size_t>& order) {
  const int n = spec.dim;
  const std::size_t nn = static_cast<std::size_t>(n);
  const double a = spec.chart_radius();
  GridMap m;
  m.lattice = lat;
  m.components = n;
  m.values.assign(lat.size() * nn, kNaN);
  m.defined.assign(lat.size(), 0);
  geometry::LogWarmStart warm;
  Vec z(n);
  for (std::size_t idx : order) {
    for (int c = 0; c < n; ++c) z[c] = exp_points[idx * nn + static_cast<std::size_t>(c)];
    Vec zeta;
    try {
      zeta = geometry::log_map(spec, fi, z, warm);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) {
        warm.valid = false;
        continue;
      }
      throw;
    }
    if (!(zeta.norm() < a)) continue;
    for (int c = 0; c < n; ++c) m.values[idx * nn + static_cast<std::size_t>(c)] = zeta[c];
    m.defined[idx] = 1;
  }
  return m;
}

std::vector<double> exp_grid(const ManifoldSpec& spec, const Frame& fj, const Lattice& lat) {
  const std::size_t nn = static_cast<std::size_t>(spec.dim);
  std::vector<double> pts(lat.size() * nn, kNaN);
  for (std::size_t idx : lat.active()) {
    const Vec z = geometry::shoot(spec, fj, lat.point(idx));
    for (std::size_t c = 0; c < nn; ++c) pts[idx * nn + c] = z[static_cast<int>(c)];
  }
  return pts;
}

bool same_mask(const GridMap& a, const GridMap& b) { return a.defined == b.defined; }

}  // namespace

std::size_t GridMap::defined_count() const {
  return static_cast<std::size_t>(std::count(defined.begin(), defined.end(), 1));
}

bool GridMap::fully_defined() const {
  for (std::size_t idx : lattice.active())
    if (!defined[idx]) return false;
  return true;
}

bool GridMap::evaluate(const Vec& xi, Vec& out, bool cubic) const {
  out.resize(components);
  double buf[kMaxDim];
  if (cubic && interpolate_cubic(lattice, values, components, xi, buf)) {
    for (int c = 0; c < components; ++c) out[c] = buf[c];
    return true;
  }
  if (interpolate_linear(lattice, values, components, xi, buf)) {
    for (int c = 0; c < components; ++c) out[c] = buf[c];
    return true;
  }
  return false;
}

Vec GridMap::at(std::size_t idx) const {
  Vec v(components);
  for (int c = 0; c < components; ++c) v[c] = values[idx * static_cast<std::size_t>(components) + static_cast<std::size_t>(c)];
  return v;
}

GridMap identity_map(const Lattice& lattice) {
  const int n = lattice.dim();
  GridMap m;
  m.lattice = lattice;
  m.components = n;
  m.values.assign(lattice.size() * static_cast<std::size_t>(n), kNaN);
  m.defined.assign(lattice.size(), 0);
  for (std::size_t idx : lattice.active()) {
    const Vec x = lattice.point(idx);
    for (int c = 0; c < n; ++c) m.values[idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(c)] = x[c];
    m.defined[idx] = 1;
  }
  return m;
}

GridMap transition_map_k(const ManifoldSpec& spec, const Vec& y_i, const Vec& y_j, double rho, double spacing) {
  const Lattice lat(spec.dim, 2.0 * rho, spacing, true);
  const Frame fi = geometry::make_frame(spec, y_i);
  const Frame fj = geometry::make_frame(spec, y_j);
  return compose_map(spec, fi, lat, exp_grid(spec, fj, lat), serpentine(lat));
}

double c2_norm(const GridMap& f) {
  const Lattice& lat = f.lattice;
  const int n = lat.dim();
  const int comps = f.components;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double buf[kMaxDim];
  for (std::size_t idx : lat.active()) {
    if (!f.defined[idx]) continue;
    for (int c = 0; c < comps; ++c) {
      s0 = std::max(s0, std::abs(f.values[idx * static_cast<std::size_t>(comps) + static_cast<std::size_t>(c)]));
    }
    for (int a = 0; a < n; ++a) {
      if (lattice_derivative(lat, f.values, comps, f.defined, idx, a, buf)) {
        for (int c = 0; c < comps; ++c) s1 = std::max(s1, std::abs(buf[c]));
      }
      for (int b = a; b < n; ++b) {
        if (lattice_second_derivative(lat, f.values, comps, f.defined, idx, a, b, buf)) {
          for (int c = 0; c < comps; ++c) s2 = std::max(s2, std::abs(buf[c]));
        }
      }
    }
  }
  return s0 + s1 + s2;
}

double c2_distance(const GridMap& a, const GridMap& b) {
  if (!a.lattice.same_as(b.lattice) || a.components != b.components) {
    fail(ErrorCode::LatticeMismatch, "grid maps on different lattices");
  }
  GridMap d;
  d.lattice = a.lattice;
  d.components = a.components;
  d.values.assign(a.values.size(), kNaN);
  d.defined.assign(a.defined.size(), 0);
  const std::size_t comps = static_cast<std::size_t>(a.components);
  for (std::size_t idx : a.lattice.active()) {
    if (!a.defined[idx] || !b.defined[idx]) continue;
    d.defined[idx] = 1;
    for (std::size_t c = 0; c < comps; ++c) d.values[idx * comps + c] = a.values[idx * comps + c] - b.values[idx * comps + c];
  }
  return c2_norm(d);
}

std::string to_string(TransitionStatus s) {
  switch (s) {
    case TransitionStatus::Converged: return "converged";
    case TransitionStatus::MaskUnstable: return "mask_unstable";
    case TransitionStatus::NotCauchy: return "not_cauchy";
  }
  return "not_cauchy";
}

TransitionStatus classify_increments(const std::vector<double>& inc, bool mask_stable, double tol_c2) {
  if (!mask_stable) return TransitionStatus::MaskUnstable;
  if (inc.size() < 2) return TransitionStatus::NotCauchy;
  const double last = inc.back(), prev = inc[inc.size() - 2];
  const bool decreasing = last <= prev || last <= 1e-3 * tol_c2;
  return last < tol_c2 && decreasing ? TransitionStatus::Converged : TransitionStatus::NotCauchy;
}

TransitionLimit limit_transition(const std::vector<GridMap>& maps, double tol_c2) {
  if (maps.size() < 3) fail(ErrorCode::InvalidArgument, "limit_transition needs at least 3 samples");
  TransitionLimit out;
  for (std::size_t s = 1; s < maps.size(); ++s) {
    out.increments.push_back(same_mask(maps[s - 1], maps[s]) ? c2_distance(maps[s - 1], maps[s]) : kInf);
  }
  out.status = classify_increments(out.increments, same_mask(maps[maps.size() - 2], maps.back()), tol_c2);
  out.map = maps.back();
  return out;
}

bool GluingData::in_k(int i, int j) const {
  return std::binary_search(k_set.begin(), k_set.end(), Pair{i, j});
}

bool GluingData::overlaps(int i, int j) const {
  return std::binary_search(overlap_k.begin(), overlap_k.end(), Pair{i, j});
}

GluingData build_gluing(const ManifoldSpec& spec, const Discretization& disc, const TrailingSystem& trailing,
                        double rho, double spacing, const GluingOptions& options) {
  const int I = trailing.i_max;
  const std::size_t S = trailing.k_schedule.size();
  if (S < 3) fail(ErrorCode::InvalidArgument, "gluing needs at least 3 schedule samples");
  const double a = spec.chart_radius();
  if (!(2.0 * rho < a)) fail(ErrorCode::ConstraintViolation, "2 rho must be below a");
  const std::size_t nI = static_cast<std::size_t>(I) + 1;

  GluingData g;
  g.i_max = I;
  g.rho = rho;
  g.spacing = spacing;
  g.step_increments.assign(S - 1, 0.0);

  const Lattice map_lat(spec.dim, 2.0 * rho, spacing, true);
  const Lattice chart_lat(spec.dim, rho, spacing, false);
  const auto order = serpentine(map_lat);

  std::vector<std::vector<Frame>> frames(S);
  std::vector<std::vector<std::vector<double>>> dist(S, std::vector<std::vector<double>>(nI, std::vector<double>(nI, 0.0)));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < nI; ++i) frames[s].push_back(geometry::make_frame(spec, disc.points[trailing.order[s][i]]));
    for (std::size_t i = 0; i < nI; ++i)
      for (std::size_t j = i + 1; j < nI; ++j) {
        const double d = local_distance(spec, frames[s][i], disc.points[trailing.order[s][j]]);
        dist[s][i][j] = dist[s][j][i] = d;
      }
  }

  const double near = 2.0 * rho + 2.0 * spacing;
  std::vector<std::vector<char>> candidate(nI, std::vector<char>(nI, 0));
  std::vector<char> needs_exp(nI, 0);
  for (std::size_t i = 0; i < nI; ++i) {
    g.k_set.push_back({static_cast<int>(i), static_cast<int>(i)});
    g.overlap_k.push_back({static_cast<int>(i), static_cast<int>(i)});
    for (std::size_t j = 0; j < nI; ++j) {
      if (i == j) continue;
      const bool close = dist[S - 1][i][j] < near || dist[S - 2][i][j] < near;
      if (close) {
        candidate[i][j] = 1;
        needs_exp[j] = 1;
      } else if (dist[S - 1][i][j] + 2.0 * rho < a && dist[S - 2][i][j] + 2.0 * rho < a) {
        g.k_set.push_back({static_cast<int>(i), static_cast<int>(j)});
        ++g.certified_pairs;
      }
    }
  }

  std::vector<std::vector<std::vector<double>>> exps(S, std::vector<std::vector<double>>(nI));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t j = 0; j < nI; ++j)
      if (needs_exp[j]) exps[s][j] = exp_grid(spec, frames[s][j], map_lat);

  std::map<Pair, GridMap> finals;
  std::map<Pair, bool> defined_tail;
  for (std::size_t i = 0; i < nI; ++i) {
    for (std::size_t j = 0; j < nI; ++j) {
      if (!candidate[i][j]) continue;
      const Pair key{static_cast<int>(i), static_cast<int>(j)};
      GridMap prev;
      std::vector<double> inc;
      bool tail_full = true;
      bool mask_stable = true;
      for (std::size_t s = 0; s < S; ++s) {
        GridMap cur = compose_map(spec, frames[s][i], map_lat, exps[s][j], order);
        if (s + 2 >= S && !cur.fully_defined()) tail_full = false;
        if (s > 0) {
          const bool sm = same_mask(prev, cur);
          const double d = sm ? c2_distance(prev, cur) : kInf;
          inc.push_back(d);
          g.step_increments[s - 1] = std::max(g.step_increments[s - 1], d);
          if (s + 1 == S) mask_stable = sm;
        }
        prev = std::move(cur);
      }
      ++g.computed_pairs;
      g.status[key] = classify_increments(inc, mask_stable, options.tol_c2);
      g.increments[key] = inc;
      finals[key] = std::move(prev);
      defined_tail[key] = tail_full;
    }
  }

  auto admissible = [&](const Pair& p) {
    if (!defined_tail[p]) return false;
    return !options.require_convergence || g.status[p] == TransitionStatus::Converged;
  };
  std::vector<std::size_t> chart_to_map;
  for (std::size_t idx = 0; idx < chart_lat.size(); ++idx) {
    const auto m = map_lat.index_of(chart_lat.coords(idx));
    chart_to_map.push_back(m ? *m : 0);
  }
  const int n = spec.dim;
  for (std::size_t i = 0; i < nI; ++i) {
    for (std::size_t j = i + 1; j < nI; ++j) {
      if (!candidate[i][j]) continue;
      const Pair pij{static_cast<int>(i), static_cast<int>(j)}, pji{static_cast<int>(j), static_cast<int>(i)};
      if (!(admissible(pij) && admissible(pji))) continue;
      g.k_set.push_back(pij);
      g.k_set.push_back(pji);
      // omega(i, j) on chart i: zeta with |psi_ji(zeta)| < rho, dilated by one cell.
      auto omega_for = [&](const GridMap& psi_other) {
        std::vector<unsigned char> core(chart_lat.size(), 0), out(chart_lat.size(), 0);
        bool any = false;
        for (std::size_t idx : chart_lat.active()) {
          const std::size_t m = chart_to_map[idx];
          if (!psi_other.defined[m]) continue;
          if (psi_other.at(m).norm() < rho) {
            core[idx] = 1;
            any = true;
          }
        }
        if (!any) return out;
        for (std::size_t idx : chart_lat.active()) {
          if (!core[idx]) continue;
          const LatticeCoord z = chart_lat.coords(idx);
          int total = 1;
          for (int m = 0; m < n; ++m) total *= 3;
          for (int t = 0; t < total; ++t) {
            int rem = t;
            LatticeCoord zz = z;
            for (int m = 0; m < n; ++m) {
              zz[static_cast<std::size_t>(m)] += rem % 3 - 1;
              rem /= 3;
            }
            const auto q = chart_lat.index_of(zz);
            if (q && chart_lat.inside(*q)) out[*q] = 1;
          }
        }
        return out;
      };
      auto om_ij = omega_for(finals[pji]);
      auto om_ji = omega_for(finals[pij]);
      const bool ov = std::find(om_ij.begin(), om_ij.end(), 1) != om_ij.end() &&
                      std::find(om_ji.begin(), om_ji.end(), 1) != om_ji.end();
      if (!ov) continue;
      g.overlap_k.push_back(pij);
      g.overlap_k.push_back(pji);
      g.omega[pij] = std::move(om_ij);
      g.omega[pji] = std::move(om_ji);
      g.psi[pij] = std::move(finals[pij]);
      g.psi[pji] = std::move(finals[pji]);
    }
  }
  std::sort(g.k_set.begin(), g.k_set.end());
  std::sort(g.overlap_k.begin(), g.overlap_k.end());
  if (I > 0 && g.k_set.size() == nI) fail(ErrorCode::NoConvergedPairs, "no transition pair converged");
  return g;
}

namespace {

void finish_metric(MetricField& f, const Lattice& lat, int n, double tol_c2) {
  const std::size_t nn = static_cast<std::size_t>(n);
  f.converged = classify_increments(f.increments, true, tol_c2) == TransitionStatus::Converged;
  f.min_eigenvalue = kInf;
  f.max_condition = 0.0;
  for (std::size_t idx : lat.active()) {
    Mat g(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) g(a, b) = f.g[idx * nn * nn + static_cast<std::size_t>(a * n + b)];
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    f.min_eigenvalue = std::min(f.min_eigenvalue, lo);
    f.max_condition = std::max(f.max_condition, lo > 0.0 ? hi / lo : kInf);
  }
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    if (std::isnan(a[q]) || std::isnan(b[q])) continue;
    s = std::max(s, std::abs(a[q] - b[q]));
  }
  return s;
}

}  // namespace

MetricField limit_metric(const spotlight::ChartSampler& sampler, const TrailingSystem& trailing, int i,
                         double tol_c2) {
  if (i < 0 || i > trailing.i_max) fail(ErrorCode::InvalidArgument, "chart index beyond I_max");
  MetricField f;
  const std::vector<double>* prev = nullptr;
  for (std::size_t s = 0; s < trailing.k_schedule.size(); ++s) {
    const auto& c = sampler.chart(trailing.order[s][static_cast<std::size_t>(i)]);
    if (prev) f.increments.push_back(sup_diff(*prev, c.metric));
    prev = &c.metric;
    if (s + 1 == trailing.k_schedule.size()) {
      f.g = c.metric;
      f.inv = c.inv_metric;
      f.volume = c.volume;
    }
  }
  finish_metric(f, sampler.lattice(), sampler.spec().dim, tol_c2);
  return f;
}

MetricField limit_metric(const ManifoldSpec& spec, const Discretization& disc, const TrailingSystem& trailing,
                         int i, double rho, double spacing, double tol_c2) {
  if (i < 0 || i > trailing.i_max) fail(ErrorCode::InvalidArgument, "chart index beyond I_max");
  const int n = spec.dim;
  const std::size_t nn = static_cast<std::size_t>(n);
  const Lattice lat(n, rho, spacing, false);
  MetricField f;
  std::vector<double> prev;
  for (std::size_t s = 0; s < trailing.k_schedule.size(); ++s) {
    const Frame fr = geometry::make_frame(spec, disc.points[trailing.order[s][static_cast<std::size_t>(i)]]);
    std::vector<double> g(lat.size() * nn * nn, kNaN), inv(lat.size() * nn * nn, kNaN), vol(lat.size(), 0.0);
    for (std::size_t idx : lat.active()) {
      const Mat gt = geometry::pullback_metric(spec, fr, lat.point(idx));
      const Mat gi = gt.inverse();
      vol[idx] = std::sqrt(gt.determinant());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          g[idx * nn * nn + static_cast<std::size_t>(a * n + b)] = gt(a, b);
          inv[idx * nn * nn + static_cast<std::size_t>(a * n + b)] = gi(a, b);
        }
    }
    if (s > 0) f.increments.push_back(sup_diff(prev, g));
    prev = g;
    f.g = std::move(g);
    f.inv = std::move(inv);
    f.volume = std::move(vol);
  }
  finish_metric(f, lat, n, tol_c2);
  if (!f.converged) fail(ErrorCode::NotCauchy, "pullback metric does not settle along the schedule");
  return f;
}

bool InfinityAtlas::apply(int i, int j, const Vec& xi, Vec& out, bool cubic) const {
  if (i == j) {
    out = xi;
    return true;
  }
  const auto it = gluing.psi.find({i, j});
  if (it == gluing.psi.end()) return false;
  return it->second.evaluate(xi, out, cubic);
}

InfinityAtlas build_atlas(const spotlight::ChartSampler& sampler, const TrailingSystem& trailing,
                          const AtlasOptions& options) {
  const auto& spec = sampler.spec();
  const double rho = sampler.partition().rho();
  const double h = sampler.spacing();
  InfinityAtlas at;
  at.dim = spec.dim;
  at.i_max = trailing.i_max;
  at.rho = rho;
  at.spacing = h;
  at.chart_lattice = sampler.lattice();
  at.map_lattice = Lattice(spec.dim, 2.0 * rho, h, true);
  for (std::size_t idx = 0; idx < at.chart_lattice.size(); ++idx) {
    const auto m = at.map_lattice.index_of(at.chart_lattice.coords(idx));
    at.chart_to_map.push_back(m ? *m : 0);
  }
  at.gluing = build_gluing(spec, sampler.disc(), trailing, rho, h, options.gluing);
  for (int i = 0; i <= trailing.i_max; ++i) {
    at.metrics.push_back(limit_metric(sampler, trailing, i, options.gluing.tol_c2));
  }
  const std::size_t nI = static_cast<std::size_t>(trailing.i_max) + 1;
  at.partition.assign(nI, std::vector<double>(at.chart_lattice.size(), 0.0));
  for (std::size_t i = 0; i < nI; ++i) {
    for (std::size_t idx : at.chart_lattice.active()) {
      const double own = bump(at.chart_lattice.point(idx).norm() / rho);
      double den = own;
      for (std::size_t j = 0; j < nI; ++j) {
        if (j == i) continue;
        const auto it = at.gluing.psi.find({static_cast<int>(j), static_cast<int>(i)});
        if (it == at.gluing.psi.end()) continue;
        const std::size_t m = at.chart_to_map[idx];
        if (!it->second.defined[m]) continue;
        den += bump(it->second.at(m).norm() / rho);
      }
      at.partition[i][idx] = den > 0.0 ? own / den : 0.0;
    }
  }
  at.quality = verify_atlas(at, options.tol_cocycle, options.tol_metric);
  return at;
}

AtlasQuality verify_atlas(const InfinityAtlas& at, double tol_cocycle, double tol_metric) {
  AtlasQuality q;
  const int n = at.dim;
  const std::size_t nn = static_cast<std::size_t>(n);
  const double rho = at.rho, h = at.spacing;
  const Lattice& cl = at.chart_lattice;
  const auto& G = at.gluing;

  // (a) inverse consistency on Omega_ij.
  Vec v, w;
  for (const auto& [key, om] : G.omega) {
    const auto [i, j] = key;
    const GridMap& psi_ji = G.psi.at({j, i});
    for (std::size_t idx : cl.active()) {
      if (!om[idx]) continue;
      const std::size_t m = at.chart_to_map[idx];
      if (!psi_ji.defined[m]) continue;
      if (!at.apply(i, j, psi_ji.at(m), w)) continue;
      q.inverse_residual = std::max(q.inverse_residual, (w - cl.point(idx)).norm());
    }
  }
  for (const auto& p : G.overlap_k)
    if (p.first < p.second) ++q.overlap_pairs;

  // (b) cocycle psi_il = psi_ij o psi_jl on chart l, for triples with
  // pairwise overlaps, lowest index sums first.
  std::vector<std::array<int, 3>> triples;
  const int I = at.i_max;
  for (int i = 0; i <= I; ++i)
    for (int j = i + 1; j <= I; ++j) {
      if (!G.overlaps(i, j)) continue;
      for (int l = j + 1; l <= I; ++l)
        if (G.overlaps(j, l) && G.overlaps(i, l)) triples.push_back({i, j, l});
    }
  std::stable_sort(triples.begin(), triples.end(), [](const auto& x, const auto& y) {
    return x[0] + x[1] + x[2] < y[0] + y[1] + y[2];
  });
  if (triples.size() > 200) triples.resize(200);
  for (const auto& t : triples) {
    const int i = t[0], j = t[1], l = t[2];
    const GridMap& psi_jl = G.psi.at({j, l});
    const GridMap& psi_il = G.psi.at({i, l});
    for (std::size_t idx : cl.active()) {
      const std::size_t m = at.chart_to_map[idx];
      if (!psi_jl.defined[m] || !psi_il.defined[m]) continue;
      v = psi_jl.at(m);
      if (!(v.norm() < rho)) continue;
      if (!at.apply(i, j, v, w)) continue;
      q.cocycle_residual = std::max(q.cocycle_residual, (w - psi_il.at(m)).norm());
    }
  }
  q.triples_checked = triples.size();

  // (c) metric compatibility g^(j) = Dpsi_ij^T g^(i)(psi_ij) Dpsi_ij.
  const double margin = 3.0 * h;
  double dbuf[kMaxDim], gbuf[kMaxDim * kMaxDim];
  for (const auto& [key, psi] : G.psi) {
    const auto [i, j] = key;
    const auto& gi = at.metrics[static_cast<std::size_t>(i)];
    const auto& gj = at.metrics[static_cast<std::size_t>(j)];
    for (std::size_t idx : cl.active()) {
      const std::size_t m = at.chart_to_map[idx];
      if (!psi.defined[m]) continue;
      v = psi.at(m);
      if (!(v.norm() < rho - margin)) continue;
      Mat D(n, n);
      bool ok = true;
      for (int a = 0; a < n && ok; ++a) {
        ok = lattice_derivative(psi.lattice, psi.values, n, psi.defined, m, a, dbuf);
        for (int c = 0; c < n; ++c) D(c, a) = dbuf[c];
      }
      if (!ok) continue;
      if (!interpolate_cubic(cl, gi.g, n * n, v, gbuf)) continue;
      Mat Gi(n, n), Gj(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          Gi(a, b) = gbuf[a * n + b];
          Gj(a, b) = gj.g[idx * nn * nn + static_cast<std::size_t>(a * n + b)];
        }
      const Mat diff = Gj - D.transpose() * Gi * D;
      q.metric_residual = std::max(q.metric_residual, diff.cwiseAbs().maxCoeff());
    }
  }

  // (d) smoothness and (e) metric spectra.
  for (const auto& [key, psi] : G.psi) q.c2_bound = std::max(q.c2_bound, c2_norm(psi));
  q.min_eigenvalue = kInf;
  for (const auto& f : at.metrics) {
    q.min_eigenvalue = std::min(q.min_eigenvalue, f.min_eigenvalue);
    q.max_condition = std::max(q.max_condition, f.max_condition);
    q.metrics_converged = q.metrics_converged && f.converged;
    for (std::size_t idx : cl.active())
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double e = f.g[idx * nn * nn + static_cast<std::size_t>(a * n + b)] - (a == b ? 1.0 : 0.0);
          q.flat_deviation = std::max(q.flat_deviation, std::abs(e));
        }
  }
  if (at.metrics.empty()) q.min_eigenvalue = 0.0;
  q.inverse_ok = q.inverse_residual < tol_cocycle;
  q.cocycle_ok = q.cocycle_residual < tol_cocycle;
  q.metric_ok = q.metric_residual < tol_metric;
  return q;
}

namespace {

void check_profile(const InfinityAtlas& at, const std::vector<GridFunction>& w) {
  if (w.size() != static_cast<std::size_t>(at.i_max) + 1) {
    fail(ErrorCode::IncompatibleProfile, "profile chart count differs from the atlas");
  }
  for (const auto& f : w) {
    if (!f.lattice.same_as(at.chart_lattice)) fail(ErrorCode::IncompatibleProfile, "profile lattice differs from the atlas");
  }
}

}  // namespace

InfinityNorms norms_on_infinity(const InfinityAtlas& at, const std::vector<GridFunction>& w, double p) {
  check_profile(at, w);
  const Lattice& cl = at.chart_lattice;
  const int n = at.dim;
  const std::size_t nn = static_cast<std::size_t>(n);
  const double dv = std::pow(at.spacing, n);
  InfinityNorms out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto& f = w[i].values;
    const auto& met = at.metrics[i];
    const auto& chi = at.partition[i];
    bool nonzero = false;
    for (std::size_t idx : cl.active())
      if (f[idx] != 0.0) {
        nonzero = true;
        break;
      }
    if (!nonzero) continue;
    const auto grad = spotlight::grid_gradient(cl, f);
    for (std::size_t idx : cl.active()) {
      const double c = chi[idx];
      if (c == 0.0) continue;
      const double* g = grad.data() + idx * nn;
      const double* gi = met.inv.data() + idx * nn * nn;
      double qd = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) qd += g[a] * gi[a * n + b] * g[b];
      if (std::isnan(qd)) qd = 0.0;
      out.h12_square += c * (f[idx] * f[idx] + qd) * met.volume[idx];
      out.lp_power += c * std::pow(std::abs(f[idx]), p) * met.volume[idx];
    }
  }
  out.h12_square *= dv;
  out.lp_power *= dv;
  out.h12 = std::sqrt(out.h12_square);
  out.lp = std::pow(out.lp_power, 1.0 / p);
  return out;
}

double relative_l2_on_infinity(const InfinityAtlas& at, const std::vector<GridFunction>& a,
                               const std::vector<GridFunction>& b) {
  check_profile(at, a);
  check_profile(at, b);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t idx : at.chart_lattice.active()) {
      const double c = at.partition[i][idx] * at.metrics[i].volume[idx];
      const double d = a[i].values[idx] - b[i].values[idx];
      num += c * d * d;
      den += c * b[i].values[idx] * b[i].values[idx];
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace {

std::string component_payload(const Lattice& lat, const std::vector<double>& values, int ncomp, int c,
                              const std::filesystem::path& dir) {
  GridFunction f;
  f.lattice = lat;
  f.values.resize(lat.size());
  for (std::size_t idx = 0; idx < lat.size(); ++idx) {
    f.values[idx] = values[idx * static_cast<std::size_t>(ncomp) + static_cast<std::size_t>(c)];
  }
  const std::string h = content_hash(f);
  if (!dir.empty()) write_binary(f, dir / (h + ".bin"));
  return h;
}

nlohmann::json pairs_json(const std::vector<Pair>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& p : v) a.push_back({p.first, p.second});
  return a;
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const InfinityAtlas& at, const std::filesystem::path& payload_dir, bool transitions) {
  nlohmann::json j;
  j["dim"] = at.dim;
  j["I_max"] = at.i_max;
  j["rho"] = at.rho;
  j["spacing"] = at.spacing;
  j["K_set"] = pairs_json(at.gluing.k_set);
  j["overlap_K"] = pairs_json(at.gluing.overlap_k);
  j["certified_pairs"] = at.gluing.certified_pairs;
  j["computed_pairs"] = at.gluing.computed_pairs;
  nlohmann::json steps = nlohmann::json::array();
  for (double s : at.gluing.step_increments) steps.push_back(finite_or_null(s));
  j["step_increments"] = steps;
  nlohmann::json psi = nlohmann::json::object();
  for (const auto& [key, m] : at.gluing.psi) {
    nlohmann::json refs = nlohmann::json::array();
    const std::filesystem::path dir = transitions ? payload_dir : std::filesystem::path{};
    for (int c = 0; c < m.components; ++c) refs.push_back(component_payload(m.lattice, m.values, m.components, c, dir));
    psi[std::to_string(key.first) + "," + std::to_string(key.second)] = refs;
  }
  j["psi"] = psi;
  nlohmann::json status = nlohmann::json::object();
  for (const auto& [key, s] : at.gluing.status) {
    status[std::to_string(key.first) + "," + std::to_string(key.second)] = to_string(s);
  }
  j["transition_status"] = status;
  nlohmann::json metrics = nlohmann::json::array();
  const int nn = at.dim * at.dim;
  for (const auto& f : at.metrics) {
    nlohmann::json refs = nlohmann::json::array();
    for (int c = 0; c < nn; ++c) refs.push_back(component_payload(at.chart_lattice, f.g, nn, c, payload_dir));
    metrics.push_back({{"refs", refs},
                       {"converged", f.converged},
                       {"min_eigenvalue", finite_or_null(f.min_eigenvalue)},
                       {"max_condition", finite_or_null(f.max_condition)}});
  }
  j["metrics"] = metrics;
  const auto& q = at.quality;
  j["quality"] = {{"inverse_residual", q.inverse_residual},
                  {"cocycle_residual", q.cocycle_residual},
                  {"metric_residual", q.metric_residual},
                  {"c2_bound", q.c2_bound},
                  {"min_eigenvalue", finite_or_null(q.min_eigenvalue)},
                  {"max_condition", finite_or_null(q.max_condition)},
                  {"flat_deviation", q.flat_deviation},
                  {"triples_checked", q.triples_checked},
                  {"overlap_pairs", q.overlap_pairs},
                  {"metrics_converged", q.metrics_converged}};
  return j;
}

}  // namespace conclab::atlas
