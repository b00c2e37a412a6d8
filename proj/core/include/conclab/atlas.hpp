#pragma once

#include "conclab/discretization.hpp"
#include "conclab/lattice.hpp"
#include "conclab/spotlight.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

namespace conclab::atlas {

using discretization::Discretization;
using discretization::TrailingSystem;
using geometry::ManifoldSpec;

using Pair = std::pair<int, int>;

// R^N-valued samples on a closed-ball lattice with a definedness mask.
struct GridMap {
  Lattice lattice;
  int components = 0;
  std::vector<double> values;          // size * components
  std::vector<unsigned char> defined;  // size

  std::size_t defined_count() const;
  bool fully_defined() const;
  // Interpolated value (cubic when the stencil fits, else multilinear).
  bool evaluate(const Vec& xi, Vec& out, bool cubic = true) const;
  Vec at(std::size_t idx) const;
};

GridMap identity_map(const Lattice& lattice);

// psi_ij,k = e_{y_i}^{-1} o e_{y_j} on the closed 2 rho lattice; entries are
// undefined where e_{y_j}(xi) leaves B(y_i, a).
GridMap transition_map_k(const ManifoldSpec& spec, const Vec& y_i, const Vec& y_j, double rho,
                         double spacing);

// Discrete C^2 size: sup |f| + sup |Df| + sup |D^2 f| over the common mask.
double c2_norm(const GridMap& f);
double c2_distance(const GridMap& a, const GridMap& b);

enum class TransitionStatus { Converged, MaskUnstable, NotCauchy };
std::string to_string(TransitionStatus s);

struct TransitionLimit {
  GridMap map;
  TransitionStatus status = TransitionStatus::NotCauchy;
  std::vector<double> increments;
};

// Converged iff the last C^2 increment is below tol_c2 and not larger than
// the previous one. Increments below 1e-3 tol_c2 are round-off and count as
// non-increasing.
TransitionLimit limit_transition(const std::vector<GridMap>& maps, double tol_c2);
TransitionStatus classify_increments(const std::vector<double>& increments, bool mask_stable, double tol_c2);

struct GluingOptions {
  double tol_c2 = 1e-4;
  // When false, pairs enter K on eventual definedness alone.
  bool require_convergence = true;
};

struct GluingData {
  int i_max = 0;
  double rho = 0.0;
  double spacing = 0.0;
  std::vector<Pair> k_set;      // sorted, includes (i, i)
  std::vector<Pair> overlap_k;  // sorted, includes (i, i)
  std::map<Pair, GridMap> psi;  // off-diagonal overlap pairs
  std::map<Pair, std::vector<unsigned char>> omega;  // mask on the Omega_rho lattice of chart i
  std::map<Pair, TransitionStatus> status;            // computed pairs
  std::map<Pair, std::vector<double>> increments;     // computed pairs
  std::vector<double> step_increments;  // max C^2 increment per schedule step
  std::size_t certified_pairs = 0;      // in K by the triangle inequality, no overlap possible
  std::size_t computed_pairs = 0;

  bool in_k(int i, int j) const;
  bool overlaps(int i, int j) const;
};

// Transition maps along the schedule for every pair of trailing indices.
// Pairs whose centers stay at least 2 rho + 2h apart at the last two samples
// cannot overlap; they enter K when d + 2 rho < a holds there.
GluingData build_gluing(const ManifoldSpec& spec, const Discretization& disc, const TrailingSystem& trailing,
                        double rho, double spacing, const GluingOptions& options = {});

struct MetricField {
  std::vector<double> g;       // size * N * N on the Omega_rho lattice
  std::vector<double> inv;     // size * N * N
  std::vector<double> volume;  // size
  std::vector<double> increments;
  bool converged = false;
  double min_eigenvalue = 0.0;
  double max_condition = 0.0;
};

// Pullback metric of chart i along the schedule, from the chart cache.
MetricField limit_metric(const spotlight::ChartSampler& sampler, const TrailingSystem& trailing, int i,
                         double tol_c2);
// Standalone form; throws NotCauchy when the field does not settle.
MetricField limit_metric(const ManifoldSpec& spec, const Discretization& disc, const TrailingSystem& trailing,
                         int i, double rho, double spacing, double tol_c2);

struct AtlasQuality {
  double inverse_residual = 0.0;
  double cocycle_residual = 0.0;
  double metric_residual = 0.0;
  double c2_bound = 0.0;
  double min_eigenvalue = 0.0;
  double max_condition = 0.0;
  double flat_deviation = 0.0;  // sup |g^(i) - I|
  std::size_t triples_checked = 0;
  std::size_t overlap_pairs = 0;
  bool metrics_converged = true;
  bool inverse_ok = true;
  bool cocycle_ok = true;
  bool metric_ok = true;
};

struct InfinityAtlas {
  int dim = 0;
  int i_max = 0;
  double rho = 0.0;
  double spacing = 0.0;
  Lattice chart_lattice;  // open Omega_rho
  Lattice map_lattice;    // closed Omega_2rho
  std::vector<std::size_t> chart_to_map;  // chart lattice index -> map lattice index
  GluingData gluing;
  std::vector<MetricField> metrics;
  std::vector<std::vector<double>> partition;  // chi^infty_i on the chart lattice
  AtlasQuality quality;

  // psi_ij at an arbitrary point of chart j (identity for i == j).
  bool apply(int i, int j, const Vec& xi, Vec& out, bool cubic = true) const;
};

struct AtlasOptions {
  GluingOptions gluing;
  double tol_cocycle = 1e-5;
  double tol_metric = 1e-3;
};

InfinityAtlas build_atlas(const spotlight::ChartSampler& sampler, const TrailingSystem& trailing,
                          const AtlasOptions& options = {});

AtlasQuality verify_atlas(const InfinityAtlas& atlas, double tol_cocycle, double tol_metric);

struct InfinityNorms {
  double h12 = 0.0;
  double lp = 0.0;
  double h12_square = 0.0;
  double lp_power = 0.0;
};

// Quadrature on M_infty with the partition b(|xi| / rho) normalized over the
// overlapping charts. Throws IncompatibleProfile on a lattice mismatch.
InfinityNorms norms_on_infinity(const InfinityAtlas& atlas, const std::vector<GridFunction>& chart_values, double p);

// Relative L^2 distance on M_infty between two chart-wise profiles.
double relative_l2_on_infinity(const InfinityAtlas& atlas, const std::vector<GridFunction>& a,
                               const std::vector<GridFunction>& b);

// JSON summary with grids referenced by content hash. Metric fields, and limit
// maps when transitions is set, are written to payload_dir when it is non-empty.
nlohmann::json to_json(const InfinityAtlas& atlas, const std::filesystem::path& payload_dir = {},
                       bool transitions = false);

}  // namespace conclab::atlas
