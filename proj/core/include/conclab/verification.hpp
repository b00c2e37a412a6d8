#pragma once

#include "conclab/config.hpp"
#include "conclab/curvature.hpp"
#include "conclab/profiles.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace conclab::verification {

enum class Outcome { Pass, Fail, NotApplicable };
std::string to_string(Outcome o);

struct Verdict {
  std::string name;
  Outcome outcome = Outcome::NotApplicable;
  std::vector<double> measured;
  double tolerance = 0.0;
  std::string notes;

  bool pass() const { return outcome == Outcome::Pass; }
  bool failed() const { return outcome == Outcome::Fail; }
};

using profiles::DecompositionReport;

// Final remainder below tol_final * ||u_1||_p, and final / first below
// min_decay_ratio unless the whole curve is already below the first bound.
Verdict check_remainder_decay(const DecompositionReport& r, double tol_final, double min_decay_ratio);
// Strictly increasing separation with final / first >= min_growth; not applicable
// with fewer than two branches.
Verdict check_separation(const DecompositionReport& r, double min_growth);
// slack >= -tol_energy * rhs.
Verdict check_plancherel(const DecompositionReport& r, double tol_energy);
Verdict check_brezis_lieb(const DecompositionReport& r, double tol);
// ||r_k||_p at the final k never grows by more than tol * ||u_k||_p.
Verdict check_energy_monotonicity(const DecompositionReport& r, double tol);
Verdict check_global_profiles(const DecompositionReport& r, double tol_profile);
Verdict check_atlas_quality(const DecompositionReport& r, double tol_cocycle, double tol_metric);
Verdict check_atlas_flat_limit(const DecompositionReport& r, double tol, bool flat_at_infinity);
Verdict check_sequence_bounded(const DecompositionReport& r);

struct StageError {
  std::string stage;
  std::string code;
  std::string message;
};

struct DiscretizationSummary {
  std::size_t points = 0;
  Vec lo, hi;
  std::map<int, int> multiplicity;
};

struct SuiteResult {
  config::ScenarioConfig config;
  DiscretizationSummary discretization;
  std::optional<geometry::CurvatureReport> curvature;
  std::optional<profiles::PartitionCheck> partition;
  std::optional<spotlight::SpotlightVerdict> spotlight;
  std::optional<DecompositionReport> report;
  std::vector<Verdict> verdicts;
  std::vector<StageError> errors;

  bool hard_failure() const { return !errors.empty(); }
  bool any_failed() const;
};

// Region of the discretization: the explicit box, or the bounding box of
// the family's support hints over the schedule grown by the margin and
// snapped outward to multiples of epsilon.
discretization::Region scenario_region(const config::ScenarioConfig& c, const spotlight::SequenceFamily& family);

// geometry -> discretization -> partition -> decomposition -> checks.
SuiteResult run_suite(const config::ScenarioConfig& c);

nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const std::vector<Verdict>& vs);

}  // namespace conclab::verification
