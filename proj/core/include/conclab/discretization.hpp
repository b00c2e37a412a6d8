#pragma once

#include "conclab/manifold.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

namespace conclab::discretization {

using geometry::ManifoldSpec;

// Region of M to discretize: a coordinate box [lo, hi] or an open geodesic
// ball B(center, radius).
struct Region {
  enum class Kind { Box, Ball };
  Kind kind = Kind::Box;
  Vec lo, hi;
  Vec center;
  double radius = 0.0;

  static Region box(const Vec& lo, const Vec& hi);
  static Region ball(const Vec& center, double radius);
};

// Uniform-cell spatial hash on coordinates.
class SpatialHash {
 public:
  SpatialHash() = default;
  SpatialHash(int dim, double cell);
  void insert(std::size_t id, const Vec& x);
  // Ids of points with |p - x| < R (coordinate norm), ascending.
  std::vector<std::size_t> query(const std::vector<Vec>& points, const Vec& x, double R) const;

 private:
  std::int64_t key(const std::array<long long, kMaxDim>& c) const;
  int dim_ = 0;
  double cell_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

struct BuildOptions {
  double candidate_spacing = 0.0;  // 0 selects epsilon / 4
  bool compute_multiplicity = true;
  double multiplicity_spacing = 0.0;  // 0 selects epsilon / 2
};

class Discretization {
 public:
  double epsilon = 0.0;
  double rho = 0.0;
  Region region;
  std::vector<Vec> points;
  std::map<int, int> multiplicity;  // t -> max count within t * epsilon

  std::size_t size() const { return points.size(); }
  void rebuild_index();
  void add_point(const Vec& p);
  // Indices of points within geodesic distance r of x are a subset of the
  // result (coordinate prefilter). Ascending.
  std::vector<std::size_t> candidates_within(const ManifoldSpec& spec, const Vec& x, double r) const;
  std::optional<std::size_t> find(const Vec& p, double tol = 1e-9) const;

 private:
  SpatialHash index_;
};

// Greedy maximal epsilon-separated set over a candidate lattice. Candidates on
// the epsilon-sublattice are offered first, then the rest, each pass in
// row-major order. Throws RegionTooFine when the candidate spacing exceeds
// epsilon / 4.
Discretization build(const ManifoldSpec& spec, const Region& region, double epsilon, double rho,
                     const BuildOptions& options = {});

// Largest number of points of Y within t * epsilon of a test point, over a
// lattice of test points in the region.
int covering_multiplicity(const ManifoldSpec& spec, const Discretization& disc, double t,
                          double test_spacing = 0.0);

// Largest distance from a test point to its nearest point of Y.
double covering_radius(const ManifoldSpec& spec, const Discretization& disc, double test_spacing);

struct TrailingSystem {
  std::vector<int> k_schedule;
  std::vector<std::size_t> core;               // index of y_k per schedule entry
  std::vector<std::vector<std::size_t>> order;  // order[s][i] = index of y_{k_s; i}
  std::vector<std::vector<double>> dist;        // dist[s][i] = d(y_k, y_{k_s; i})
  int i_max = 0;
};

// Nearest-neighbor ordering of Y around each core point, ties broken by
// build index. Distances within a relative 1e-9 of each other count as ties.
TrailingSystem trailing_system(const ManifoldSpec& spec, const Discretization& disc,
                               const std::vector<std::size_t>& core, const std::vector<int>& k_schedule,
                               int i_max);

nlohmann::json to_json(const Discretization& d);
Discretization from_json(const nlohmann::json& j);

}  // namespace conclab::discretization
