#include "conclab/discretization.hpp"

#include "conclab/error.hpp"
#include "conclab/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace conclab::discretization {

using geometry::Frame;
using geometry::coordinate_radius_bound;
using geometry::log_map;
using geometry::make_frame;

Region Region::box(const Vec& lo, const Vec& hi) {
  Region r;
  r.kind = Kind::Box;
  r.lo = lo;
  r.hi = hi;
  return r;
}

Region Region::ball(const Vec& center, double radius) {
  Region r;
  r.kind = Kind::Ball;
  r.center = center;
  r.radius = radius;
  return r;
}

SpatialHash::SpatialHash(int dim, double cell) : dim_(dim), cell_(cell) {}

std::int64_t SpatialHash::key(const std::array<long long, kMaxDim>& c) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (int m = 0; m < dim_; ++m) {
    h ^= static_cast<std::uint64_t>(c[static_cast<std::size_t>(m)]) + 0x9e3779b97f4a7c15ULL;
    h *= 1099511628211ULL;
  }
  return static_cast<std::int64_t>(h);
}

void SpatialHash::insert(std::size_t id, const Vec& x) {
  std::array<long long, kMaxDim> c{};
  for (int m = 0; m < dim_; ++m) c[static_cast<std::size_t>(m)] = static_cast<long long>(std::floor(x[m] / cell_));
  cells_[key(c)].push_back(id);
}

std::vector<std::size_t> SpatialHash::query(const std::vector<Vec>& points, const Vec& x, double R) const {
  std::vector<std::size_t> out;
  if (!std::isfinite(R)) {
    out.resize(points.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  std::array<long long, kMaxDim> lo{}, hi{};
  double ncells = 1.0;
  for (int m = 0; m < dim_; ++m) {
    lo[static_cast<std::size_t>(m)] = static_cast<long long>(std::floor((x[m] - R) / cell_));
    hi[static_cast<std::size_t>(m)] = static_cast<long long>(std::floor((x[m] + R) / cell_));
    ncells *= static_cast<double>(hi[static_cast<std::size_t>(m)] - lo[static_cast<std::size_t>(m)] + 1);
  }
  if (ncells > static_cast<double>(points.size())) {
    for (std::size_t i = 0; i < points.size(); ++i)
      if ((points[i] - x).norm() < R) out.push_back(i);
    return out;
  }
  std::array<long long, kMaxDim> c = lo;
  while (true) {
    const auto it = cells_.find(key(c));
    if (it != cells_.end()) {
      for (std::size_t id : it->second)
        if ((points[id] - x).norm() < R) out.push_back(id);
    }
    int m = dim_ - 1;
    while (m >= 0) {
      auto& cm = c[static_cast<std::size_t>(m)];
      if (++cm <= hi[static_cast<std::size_t>(m)]) break;
      cm = lo[static_cast<std::size_t>(m)];
      --m;
    }
    if (m < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Discretization::rebuild_index() {
  int dim = static_cast<int>(region.kind == Region::Kind::Box ? region.lo.size() : region.center.size());
  if (!points.empty()) dim = static_cast<int>(points.front().size());
  index_ = SpatialHash(dim, epsilon > 0.0 ? epsilon : 1.0);
  for (std::size_t i = 0; i < points.size(); ++i) index_.insert(i, points[i]);
}

void Discretization::add_point(const Vec& p) {
  points.push_back(p);
  index_.insert(points.size() - 1, p);
}

std::vector<std::size_t> Discretization::candidates_within(const ManifoldSpec& spec, const Vec& x,
                                                           double r) const {
  return index_.query(points, x, coordinate_radius_bound(spec, x, r));
}

std::optional<std::size_t> Discretization::find(const Vec& p, double tol) const {
  const auto c = index_.query(points, p, tol);
  if (c.empty()) return std::nullopt;
  return c.front();
}

namespace {

// Lattice of test or candidate points covering the region, with the flags
// needed for the two-pass greedy order.
struct CandidateGrid {
  std::vector<Vec> points;
  std::vector<char> coarse;
};

CandidateGrid region_grid(const ManifoldSpec& spec, const Region& region, double s, double epsilon) {
  const int n = spec.dim;
  Vec lo, hi;
  Frame center_frame;
  if (region.kind == Region::Kind::Box) {
    lo = region.lo;
    hi = region.hi;
  } else {
    double R = coordinate_radius_bound(spec, region.center, region.radius);
    if (!std::isfinite(R)) {
      const Mat g = geometry::metric_at(spec, region.center);
      Eigen::SelfAdjointEigenSolver<Mat> es(g);
      R = 3.0 * region.radius / std::sqrt(es.eigenvalues().minCoeff());
    }
    const double steps = std::ceil(R / s);
    lo = region.center - Vec::Constant(n, steps * s);
    hi = region.center + Vec::Constant(n, steps * s);
    center_frame = make_frame(spec, region.center);
  }
  std::array<long long, kMaxDim> cnt{};
  long long total = 1;
  for (int m = 0; m < n; ++m) {
    cnt[static_cast<std::size_t>(m)] = static_cast<long long>(std::floor((hi[m] - lo[m]) / s + 1e-9)) + 1;
    total *= cnt[static_cast<std::size_t>(m)];
  }
  if (total > 50'000'000) fail(ErrorCode::InvalidArgument, "candidate lattice too large");
  const double ratio = epsilon / s;
  const long long q = std::abs(ratio - std::round(ratio)) < 1e-9 ? std::llround(ratio) : 0;

  CandidateGrid grid;
  std::array<long long, kMaxDim> i{};
  for (long long t = 0; t < total; ++t) {
    long long rem = t;
    for (int m = n - 1; m >= 0; --m) {
      i[static_cast<std::size_t>(m)] = rem % cnt[static_cast<std::size_t>(m)];
      rem /= cnt[static_cast<std::size_t>(m)];
    }
    Vec p(n);
    bool coarse = q > 0;
    for (int m = 0; m < n; ++m) {
      const long long im = i[static_cast<std::size_t>(m)];
      p[m] = lo[m] + static_cast<double>(im) * s;
      if (q > 0 && im % q != 0) coarse = false;
    }
    if (!spec.contains(p)) continue;
    if (region.kind == Region::Kind::Ball) {
      try {
        if (log_map(spec, center_frame, p).norm() >= region.radius) continue;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) continue;
        throw;
      }
    }
    grid.points.push_back(p);
    grid.coarse.push_back(coarse ? 1 : 0);
  }
  return grid;
}

// Geodesic distance below r_max, or +inf when the points are further apart.
double local_distance(const ManifoldSpec& spec, const Frame& f, const Vec& y) {
  try {
    return log_map(spec, f, y).norm();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OutsideInjectivity || e.code() == ErrorCode::NoConvergence) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

}  // namespace

Discretization build(const ManifoldSpec& spec, const Region& region, double epsilon, double rho,
                     const BuildOptions& options) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  const double s = options.candidate_spacing > 0.0 ? options.candidate_spacing : epsilon / 4.0;
  if (s > epsilon / 4.0 * (1.0 + 1e-12)) {
    fail(ErrorCode::RegionTooFine, "candidate spacing must not exceed epsilon / 4");
  }
  if (region.kind == Region::Kind::Box) {
    if (region.lo.size() != spec.dim || region.hi.size() != spec.dim) {
      fail(ErrorCode::InvalidArgument, "region box has wrong dimension");
    }
  }
  const CandidateGrid grid = region_grid(spec, region, s, epsilon);

  Discretization d;
  d.epsilon = epsilon;
  d.rho = rho;
  d.region = region;
  d.points.reserve(grid.points.size() / 8);
  d.rebuild_index();
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t c = 0; c < grid.points.size(); ++c) {
      if ((grid.coarse[c] != 0) != (pass == 0)) continue;
      const Vec& p = grid.points[c];
      const auto near = d.candidates_within(spec, p, epsilon);
      bool ok = true;
      if (!near.empty()) {
        const Frame f = make_frame(spec, p);
        for (std::size_t id : near) {
          if (local_distance(spec, f, d.points[id]) < epsilon) {
            ok = false;
            break;
          }
        }
      }
      if (ok) d.add_point(p);
    }
  }
  if (options.compute_multiplicity) {
    for (int t : {1, 2, 4}) d.multiplicity[t] = covering_multiplicity(spec, d, t, options.multiplicity_spacing);
  }
  return d;
}

int covering_multiplicity(const ManifoldSpec& spec, const Discretization& disc, double t, double test_spacing) {
  const double s = test_spacing > 0.0 ? test_spacing : disc.epsilon / 2.0;
  const CandidateGrid grid = region_grid(spec, disc.region, s, disc.epsilon);
  const double r = t * disc.epsilon;
  int best = 0;
  for (const Vec& p : grid.points) {
    const auto near = disc.candidates_within(spec, p, r);
    if (static_cast<int>(near.size()) <= best) continue;
    const Frame f = make_frame(spec, p);
    int count = 0;
    for (std::size_t id : near)
      if (local_distance(spec, f, disc.points[id]) < r) ++count;
    best = std::max(best, count);
  }
  return best;
}

double covering_radius(const ManifoldSpec& spec, const Discretization& disc, double test_spacing) {
  const CandidateGrid grid = region_grid(spec, disc.region, test_spacing, disc.epsilon);
  double worst = 0.0;
  for (const Vec& p : grid.points) {
    const Frame f = make_frame(spec, p);
    double r = disc.epsilon;
    double best = std::numeric_limits<double>::infinity();
    while (true) {
      for (std::size_t id : disc.candidates_within(spec, p, r)) {
        best = std::min(best, local_distance(spec, f, disc.points[id]));
      }
      if (best < r || r > spec.inj_radius) break;
      r *= 2.0;
    }
    worst = std::max(worst, best);
  }
  return worst;
}

TrailingSystem trailing_system(const ManifoldSpec& spec, const Discretization& disc,
                               const std::vector<std::size_t>& core, const std::vector<int>& k_schedule,
                               int i_max) {
  if (core.size() != k_schedule.size()) fail(ErrorCode::InvalidArgument, "core and schedule lengths differ");
  if (i_max < 0) fail(ErrorCode::InvalidArgument, "I_max must be non-negative");
  if (static_cast<std::size_t>(i_max) + 1 > disc.size()) {
    fail(ErrorCode::InvalidArgument, "discretization has fewer than I_max + 1 points");
  }
  TrailingSystem ts;
  ts.k_schedule = k_schedule;
  ts.core = core;
  ts.i_max = i_max;
  const double quantum = 1e-9 * disc.epsilon;
  for (std::size_t s = 0; s < core.size(); ++s) {
    if (core[s] >= disc.size()) fail(ErrorCode::NotInDiscretization, "core index outside Y");
    const Vec& y = disc.points[core[s]];
    const Frame f = make_frame(spec, y);
    std::vector<std::pair<double, std::size_t>> found;
    double r = disc.epsilon;
    while (true) {
      found.clear();
      for (std::size_t id : disc.candidates_within(spec, y, r)) {
        const double dist = id == core[s] ? 0.0 : local_distance(spec, f, disc.points[id]);
        if (dist < r) found.emplace_back(dist, id);
      }
      if (found.size() >= static_cast<std::size_t>(i_max) + 1) break;
      if (r >= spec.inj_radius) {
        fail(ErrorCode::InvalidArgument, "fewer than I_max + 1 points within the injectivity radius");
      }
      r = std::min(2.0 * r, spec.inj_radius);
    }
    std::sort(found.begin(), found.end(), [quantum](const auto& a, const auto& b) {
      const long long qa = std::llround(a.first / quantum), qb = std::llround(b.first / quantum);
      if (qa != qb) return qa < qb;
      return a.second < b.second;
    });
    std::vector<std::size_t> ord;
    std::vector<double> dd;
    for (int i = 0; i <= i_max; ++i) {
      ord.push_back(found[static_cast<std::size_t>(i)].second);
      dd.push_back(found[static_cast<std::size_t>(i)].first);
    }
    ts.order.push_back(std::move(ord));
    ts.dist.push_back(std::move(dd));
  }
  return ts;
}

namespace {

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec json_vec(const nlohmann::json& a) {
  const auto v = a.get<std::vector<double>>();
  Vec out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

}  // namespace

nlohmann::json to_json(const Discretization& d) {
  nlohmann::json j;
  j["epsilon"] = d.epsilon;
  j["rho"] = d.rho;
  nlohmann::json reg;
  if (d.region.kind == Region::Kind::Box) {
    reg["kind"] = "box";
    reg["lo"] = vec_json(d.region.lo);
    reg["hi"] = vec_json(d.region.hi);
  } else {
    reg["kind"] = "ball";
    reg["center"] = vec_json(d.region.center);
    reg["radius"] = d.region.radius;
  }
  j["region"] = reg;
  nlohmann::json pts = nlohmann::json::array();
  for (const Vec& p : d.points) pts.push_back(vec_json(p));
  j["points"] = pts;
  nlohmann::json mult = nlohmann::json::object();
  for (const auto& [t, c] : d.multiplicity) mult[std::to_string(t)] = c;
  j["multiplicity"] = mult;
  return j;
}

Discretization from_json(const nlohmann::json& j) {
  try {
    Discretization d;
    d.epsilon = j.at("epsilon").get<double>();
    d.rho = j.at("rho").get<double>();
    const auto& reg = j.at("region");
    if (reg.at("kind").get<std::string>() == "box") {
      d.region = Region::box(json_vec(reg.at("lo")), json_vec(reg.at("hi")));
    } else {
      d.region = Region::ball(json_vec(reg.at("center")), reg.at("radius").get<double>());
    }
    for (const auto& p : j.at("points")) d.points.push_back(json_vec(p));
    if (j.contains("multiplicity")) {
      for (auto it = j["multiplicity"].begin(); it != j["multiplicity"].end(); ++it) {
        d.multiplicity[std::stoi(it.key())] = it.value().get<int>();
      }
    }
    d.rebuild_index();
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("discretization json: ") + e.what());
  }
}

}  // namespace conclab::discretization
