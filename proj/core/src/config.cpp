#include "conclab/config.hpp"

#include "conclab/catalog.hpp"
#include "conclab/error.hpp"
#include "conclab/sequences.hpp"
#include "conclab/spotlight.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace conclab::config {

namespace {

void violation(const std::string& msg) { fail(ErrorCode::ConstraintViolation, msg); }

Vec to_vec(const nlohmann::json& j, int dim, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<int>(v.size()) != dim) violation(std::string(what) + " must have dim entries");
  Vec out(dim);
  for (int i = 0; i < dim; ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

std::vector<double> from_vec(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) violation("unknown key '" + it.key() + "' in " + where);
  }
}

void read_tolerances(const nlohmann::json& j, Tolerances& t) {
  static const std::set<std::string> keys = {
      "tol_w", "tol_c2", "tol_cocycle", "tol_metric", "tol_profile", "tol_final", "tol_energy", "tol_brezis_lieb",
      "tol_mass_factor", "tol_flat_metric", "tol_partition", "tol_energy_monotone", "min_decay_ratio",
      "min_growth", "spotlight_decay"};
  check_keys(j, keys, "tolerances");
  auto rd = [&](const char* k, double& v) {
    if (j.contains(k)) {
      v = j.at(k).get<double>();
      if (!(v > 0.0)) violation(std::string(k) + " must be positive");
    }
  };
  rd("tol_w", t.tol_w);
  rd("tol_c2", t.tol_c2);
  rd("tol_cocycle", t.tol_cocycle);
  rd("tol_metric", t.tol_metric);
  rd("tol_profile", t.tol_profile);
  rd("tol_final", t.tol_final);
  rd("tol_energy", t.tol_energy);
  rd("tol_brezis_lieb", t.tol_brezis_lieb);
  rd("tol_mass_factor", t.tol_mass_factor);
  rd("tol_flat_metric", t.tol_flat_metric);
  rd("tol_partition", t.tol_partition);
  rd("tol_energy_monotone", t.tol_energy_monotone);
  rd("min_decay_ratio", t.min_decay_ratio);
  rd("min_growth", t.min_growth);
  rd("spotlight_decay", t.spotlight_decay);
}

nlohmann::json tolerances_json(const Tolerances& t) {
  return {{"tol_w", t.tol_w},
          {"tol_c2", t.tol_c2},
          {"tol_cocycle", t.tol_cocycle},
          {"tol_metric", t.tol_metric},
          {"tol_profile", t.tol_profile},
          {"tol_final", t.tol_final},
          {"tol_energy", t.tol_energy},
          {"tol_brezis_lieb", t.tol_brezis_lieb},
          {"tol_mass_factor", t.tol_mass_factor},
          {"tol_flat_metric", t.tol_flat_metric},
          {"tol_partition", t.tol_partition},
          {"tol_energy_monotone", t.tol_energy_monotone},
          {"min_decay_ratio", t.min_decay_ratio},
          {"min_growth", t.min_growth},
          {"spotlight_decay", t.spotlight_decay}};
}

}  // namespace

std::vector<std::string> check_ids() {
  return {"bounded_geometry", "partition_of_unity", "sequence_bounded",  "atlas_quality",
          "atlas_flat_limit", "global_profile",     "remainder_decay",   "plancherel",
          "brezis_lieb",      "separation",         "energy_monotonicity", "spotlight_consistency"};
}

void validate(const ScenarioConfig& c) {
  if (c.dim < 1 || c.dim > kMaxDim) violation("dim must be between 1 and " + std::to_string(kMaxDim));
  const double r = c.inj_radius;
  if (!(c.rho > 0.0)) violation("rho must be positive");
  if (!(c.rho < r / 8.0)) violation("rho must be < r(M)/8");
  if (!(2.0 * c.rho < 0.75 * r)) violation("2 rho must be < a = (3/4) r(M)");
  if (!(c.rho / 2.0 < c.rho_hat && c.rho_hat < c.rho)) violation("rho_hat must satisfy rho/2 < rho_hat < rho");
  if (!(c.epsilon > 0.0 && c.epsilon <= c.rho_hat)) violation("epsilon must satisfy 0 < epsilon <= rho_hat");
  if (!(c.spacing > 0.0 && c.spacing <= c.rho / 4.0)) violation("spacing must satisfy 0 < h <= rho/4");
  if (c.dim >= 3) {
    const double crit = 2.0 * c.dim / (c.dim - 2.0);
    if (!(c.p > 2.0 && c.p < crit)) violation("p must lie in the open interval (2, 2N/(N-2))");
  } else if (!(c.p > 2.0) || !std::isfinite(c.p)) {
    violation("p must lie in the open interval (2, infinity)");
  }
  if (c.k_schedule.size() < 4) violation("k_schedule needs at least 4 entries");
  for (std::size_t i = 0; i < c.k_schedule.size(); ++i) {
    if (c.k_schedule[i] < 1) violation("k_schedule entries must be positive");
    if (i > 0 && c.k_schedule[i] <= c.k_schedule[i - 1]) violation("k_schedule must be strictly increasing");
  }
  if (c.i_max < 0) violation("I_max must be >= 0");
  if (c.n_max < 0) violation("N_max must be >= 0");
  if (c.margin < 0.0) violation("region margin must be >= 0");
  if (c.region_explicit) {
    for (int i = 0; i < c.dim; ++i) {
      if (!(c.region_lo[i] < c.region_hi[i])) violation("region lo must be below hi in every coordinate");
    }
  }
  const auto ids = check_ids();
  for (const auto& ch : c.checks) {
    if (std::find(ids.begin(), ids.end(), ch) == ids.end()) violation("unknown check '" + ch + "'");
  }
}

ScenarioConfig parse_config(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    if (!j.is_object()) fail(ErrorCode::ParseError, "config must be a JSON object");
    check_keys(j,
               {"name", "manifold", "dim", "region", "margin", "rho", "rho_hat", "epsilon", "spacing", "k_schedule",
                "I_max", "N_max", "sequence", "p", "tolerances", "seed", "output_dir", "checks", "inj_radius",
                "require_convergence", "write_transition_payloads", "geometry_samples"},
               "config");
    c.name = j.value("name", std::string("scenario"));
    if (!j.contains("manifold")) violation("manifold is required");
    const auto& m = j.at("manifold");
    c.dim = j.value("dim", 2);
    if (m.is_string()) {
      c.catalog_id = m.get<std::string>();
    } else {
      check_keys(m, {"catalog_id", "dim", "params"}, "manifold");
      c.catalog_id = m.at("catalog_id").get<std::string>();
      if (m.contains("dim")) c.dim = m.at("dim").get<int>();
      if (m.contains("params")) c.manifold_params = m.at("params");
    }
    if (c.dim < 1 || c.dim > kMaxDim) violation("dim must be between 1 and " + std::to_string(kMaxDim));
    const auto spec = geometry::make_catalog(c.catalog_id, c.dim, c.manifold_params);
    c.inj_radius = spec.inj_radius;
    // Accepted so that normalized configs load again; must match the manifold.
    if (j.contains("inj_radius") && j.at("inj_radius").get<double>() != c.inj_radius) {
      violation("inj_radius does not match the manifold");
    }

    c.rho = j.value("rho", c.inj_radius / 12.0);
    c.rho_hat = j.value("rho_hat", 0.75 * c.rho);
    c.epsilon = j.value("epsilon", c.rho_hat);
    c.spacing = j.value("spacing", c.rho / 24.0);
    c.margin = j.value("margin", 5.0 * c.rho);
    if (j.contains("region")) {
      const auto& r = j.at("region");
      check_keys(r, {"lo", "hi", "margin"}, "region");
      if (r.contains("margin")) c.margin = r.at("margin").get<double>();
      if (r.contains("lo") != r.contains("hi")) violation("region needs both lo and hi");
      if (r.contains("lo")) {
        c.region_explicit = true;
        c.region_lo = to_vec(r.at("lo"), c.dim, "region lo");
        c.region_hi = to_vec(r.at("hi"), c.dim, "region hi");
      }
    }
    c.k_schedule = j.value("k_schedule", std::vector<int>{1, 2, 4, 8, 16, 32});
    c.i_max = j.value("I_max", 25);
    c.n_max = j.value("N_max", 8);
    if (!j.contains("sequence")) violation("sequence is required");
    const auto& s = j.at("sequence");
    if (s.is_string()) {
      c.family_id = s.get<std::string>();
    } else {
      check_keys(s, {"family_id", "params"}, "sequence");
      c.family_id = s.at("family_id").get<std::string>();
      if (s.contains("params")) c.sequence_params = s.at("params");
    }
    const auto fams = sequences::family_ids();
    if (std::find(fams.begin(), fams.end(), c.family_id) == fams.end()) {
      violation("unknown family_id '" + c.family_id + "'");
    }
    sequences::make_family(c.family_id, c.dim, c.sequence_params);
    c.p = j.value("p", spotlight::default_exponent(c.dim));
    if (j.contains("tolerances")) read_tolerances(j.at("tolerances"), c.tol);
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", "out/" + c.name);
    c.checks = j.value("checks", check_ids());
    c.require_convergence = j.value("require_convergence", true);
    c.write_transition_payloads = j.value("write_transition_payloads", false);
    c.geometry_samples = j.value("geometry_samples", 16);
    if (c.geometry_samples < 1) violation("geometry_samples must be >= 1");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed config: ") + e.what());
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, "invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["manifold"] = {{"catalog_id", c.catalog_id}, {"dim", c.dim}, {"params", c.manifold_params}};
  j["inj_radius"] = c.inj_radius;
  nlohmann::json region = {{"margin", c.margin}};
  if (c.region_explicit) {
    region["lo"] = from_vec(c.region_lo);
    region["hi"] = from_vec(c.region_hi);
  }
  j["region"] = region;
  j["rho"] = c.rho;
  j["rho_hat"] = c.rho_hat;
  j["epsilon"] = c.epsilon;
  j["spacing"] = c.spacing;
  j["k_schedule"] = c.k_schedule;
  j["I_max"] = c.i_max;
  j["N_max"] = c.n_max;
  j["sequence"] = {{"family_id", c.family_id}, {"params", c.sequence_params}};
  j["p"] = c.p;
  j["tolerances"] = tolerances_json(c.tol);
  j["seed"] = c.seed;
  j["checks"] = c.checks;
  j["require_convergence"] = c.require_convergence;
  j["write_transition_payloads"] = c.write_transition_payloads;
  j["geometry_samples"] = c.geometry_samples;
  return j;
}

void truncate_schedule(ScenarioConfig& c, int kmax) {
  std::vector<int> kept;
  for (int k : c.k_schedule)
    if (k <= kmax) kept.push_back(k);
  if (kept.size() < 4) violation("--kmax leaves fewer than 4 schedule entries");
  c.k_schedule = kept;
}

}  // namespace conclab::config
