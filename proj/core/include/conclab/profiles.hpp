#pragma once

#include "conclab/atlas.hpp"
#include "conclab/discretization.hpp"
#include "conclab/partition.hpp"
#include "conclab/spotlight.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace conclab::profiles {

using discretization::TrailingSystem;
using spotlight::ChartSampler;
using spotlight::LimitStatus;
using spotlight::ScalarFn;
using spotlight::SequenceFamily;
using spotlight::TestBank;

// Weak limits w_i of u_k o e_{y_{k;i}} for i <= I_max.
struct ProfileArray {
  std::vector<GridFunction> entries;
  std::vector<LimitStatus> statuses;
  std::vector<double> scales;

  std::size_t count(LimitStatus s) const;
};

// Samples of a sequence element on a chart lattice, indexed by schedule slot
// and chart center.
using ChartSource = std::function<std::vector<double>(std::size_t slot, std::size_t chart)>;

ProfileArray extract_local_profiles(const ChartSource& source, const ChartSampler& sampler,
                                    const TrailingSystem& trailing, const TestBank& bank, double tol_w);
ProfileArray extract_local_profiles(const SequenceFamily& family, const ChartSampler& sampler,
                                    const TrailingSystem& trailing, const TestBank& bank, double tol_w);

struct GlobalProfile {
  std::vector<GridFunction> chart_values;
  double compat_residual = 0.0;  // sup over overlaps of |w_j - w_i o psi_ij|
  double scale = 0.0;            // sup |w|
  std::size_t undetermined = 0;  // entries taken as zero
};

// Throws IncompatibleProfiles when compat_residual >= tol_profile * max(1, sup |w|).
GlobalProfile assemble_global(const ProfileArray& pa, const atlas::InfinityAtlas& atlas, double tol_profile);
// Residual only, no threshold.
double compat_residual(const std::vector<GridFunction>& w, const atlas::InfinityAtlas& atlas);

// Multilinear value of a chart grid at xi; corners outside the ball are
// dropped and the remaining weights renormalized. Zero when none remain.
double chart_value(const GridFunction& f, const Vec& xi);

// W_k(x) = sum_i chi_{y_{k;i}}(x) w_i(e_{y_{k;i}}^{-1}(x)) at schedule slot s.
ScalarFn elementary_concentration(const GlobalProfile& gp, const TrailingSystem& trailing,
                                  const PartitionOfUnity& pou, std::size_t slot);

struct DecompositionConfig {
  std::vector<int> k_schedule{1, 2, 4, 8, 16, 32};
  int i_max = 25;
  int n_max = 8;
  double p = 4.0;
  double tol_w = 1e-3;
  double tol_profile = 5e-3;
  double tol_mass_factor = 1e-3;  // times the L^p mass of u at the first k
  double tie_tolerance = 1e-9;
  atlas::AtlasOptions atlas;
};

struct Branch {
  std::vector<std::size_t> center_ids;  // y_k^{(n)} per schedule slot
  std::vector<double> captured_mass;    // local mass at selection per slot
  TrailingSystem trailing;
  std::shared_ptr<atlas::InfinityAtlas> atlas;
  ProfileArray local;
  GlobalProfile profile;
  atlas::InfinityNorms norms;
  std::string error;  // empty when the branch completed

  bool complete() const { return error.empty(); }
};

struct PlancherelCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
};

struct BrezisLiebCheck {
  std::vector<double> lhs;  // int |u_k|^p per schedule slot
  double rhs = 0.0;
  double relative_error = 0.0;
};

struct DecompositionReport {
  std::vector<int> k_schedule;
  double p = 0.0;
  double tol_mass = 0.0;
  std::map<std::size_t, GridFunction> w0;  // nonzero chart values of the weak limit
  std::size_t w0_converged = 0;
  std::size_t w0_zero = 0;
  std::size_t w0_undetermined = 0;
  double w0_h12_square = 0.0;
  double w0_lp_power = 0.0;
  std::vector<Branch> branches;
  std::vector<double> u_lp;           // ||u_k||_p
  std::vector<double> u_h12_square;   // ||u_k||^2_{H^{1,2}}
  std::vector<double> remainder_curve;
  std::vector<double> separation_curve;
  std::vector<double> energy_history;  // ||r_k||_p at the final k after w0 and each branch
  PlancherelCheck plancherel;
  BrezisLiebCheck brezis_lieb;
  bool branch_limit_reached = false;
  std::size_t h12_bound_violations = 0;
  std::string stop_reason;
};

DecompositionReport decompose(const SequenceFamily& family, const ChartSampler& sampler, const TestBank& bank,
                              const DecompositionConfig& config);

PlancherelCheck check_plancherel(const DecompositionReport& report);
double check_brezis_lieb(const DecompositionReport& report);

// Grid payloads (w0, profiles, limit metrics and, when transitions is set,
// limit transition maps) are written to payload_dir when it is non-empty.
nlohmann::json to_json(const DecompositionReport& report, const std::filesystem::path& payload_dir = {},
                       bool transitions = false);

}  // namespace conclab::profiles
