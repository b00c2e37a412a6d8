#pragma once

#include "conclab/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace conclab::config {

struct Tolerances {
  double tol_w = 1e-3;
  double tol_c2 = 1e-4;
  double tol_cocycle = 1e-5;
  double tol_metric = 1e-3;
  double tol_profile = 5e-3;
  double tol_final = 5e-2;
  double tol_energy = 2e-2;       // times the Plancherel right-hand side
  double tol_brezis_lieb = 2e-2;  // relative
  double tol_mass_factor = 1e-3;  // times int |u_1|^p
  double tol_flat_metric = 1e-3;
  double tol_partition = 1e-10;
  double tol_energy_monotone = 1e-3;  // times ||u_k||_p at the final k
  double min_decay_ratio = 0.5;
  double min_growth = 2.0;
  double spotlight_decay = 0.5;
};

struct ScenarioConfig {
  std::string name;
  std::string catalog_id;
  int dim = 2;
  nlohmann::json manifold_params = nlohmann::json::object();
  double inj_radius = 0.0;  // r(M) of the constructed manifold
  bool region_explicit = false;
  Vec region_lo, region_hi;
  double margin = 0.0;
  double rho = 0.0;
  double rho_hat = 0.0;
  double epsilon = 0.0;
  double spacing = 0.0;
  std::vector<int> k_schedule;
  int i_max = 25;
  int n_max = 8;
  std::string family_id;
  nlohmann::json sequence_params = nlohmann::json::object();
  double p = 0.0;
  Tolerances tol;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<std::string> checks;
  bool require_convergence = true;
  bool write_transition_payloads = false;
  int geometry_samples = 16;
};

std::vector<std::string> check_ids();

// Parses, fills defaults and validates. Throws ParseError on malformed
// input and ConstraintViolation naming the violated constraint.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);

// Re-checks the constraints of a config assembled in code.
void validate(const ScenarioConfig& c);

// Normalized form with all defaults filled.
nlohmann::json to_json(const ScenarioConfig& c);

// Keeps schedule entries <= kmax (at least four must remain).
void truncate_schedule(ScenarioConfig& c, int kmax);

}  // namespace conclab::config
