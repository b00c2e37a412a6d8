#include "conclab/report.hpp"

#include "conclab/discretization.hpp"
#include "conclab/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

namespace conclab::report {

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

nlohmann::json nums(const std::vector<double>& xs) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
}

}  // namespace

nlohmann::json report_json(const verification::SuiteResult& r, const std::filesystem::path& payload_dir) {
  nlohmann::json j;
  j["config"] = config::to_json(r.config);
  j["discretization"] = {{"points", r.discretization.points},
                         {"region_lo", to_std(r.discretization.lo)},
                         {"region_hi", to_std(r.discretization.hi)}};
  nlohmann::json mult = nlohmann::json::object();
  for (const auto& [t, m] : r.discretization.multiplicity) mult[std::to_string(t)] = m;
  j["discretization"]["multiplicity"] = mult;
  if (r.curvature) {
    const auto& c = *r.curvature;
    j["curvature"] = {{"max_riemann", c.max_riemann},
                      {"max_riemann_grad", c.max_riemann_grad},
                      {"min_sectional", c.min_sectional},
                      {"max_sectional", c.max_sectional},
                      {"samples", c.samples},
                      {"declared_ok", c.declared_ok},
                      {"flags", c.flags}};
  }
  if (r.partition) {
    j["partition"] = {{"max_sum_error", r.partition->max_sum_error},
                      {"max_gradient", r.partition->max_gradient},
                      {"test_points", r.partition->test_points}};
  }
  if (r.spotlight) {
    const auto& s = *r.spotlight;
    j["spotlight"] = {{"k_schedule", s.k_schedule},
                      {"lp_norms", nums(s.lp_norms)},
                      {"max_pairings", nums(s.max_pairings)},
                      {"tracked_pairings", nums(s.tracked_pairings)},
                      {"soundness_ratio", nums(s.soundness_ratio)},
                      {"bank_constant", s.bank_constant},
                      {"lp_decays", s.lp_decays},
                      {"pairings_small", s.pairings_small},
                      {"consistent", s.consistent}};
  }
  if (r.report) {
    j["decomposition"] = profiles::to_json(*r.report, payload_dir, r.config.write_transition_payloads);
  }
  j["verdicts"] = verification::to_json(r.verdicts);
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : r.errors) errs.push_back({{"stage", e.stage}, {"code", e.code}, {"message", e.message}});
  j["errors"] = errs;
  return j;
}

nlohmann::json atlas_quality_json(const verification::SuiteResult& r) {
  nlohmann::json a = nlohmann::json::array();
  if (!r.report) return a;
  for (std::size_t n = 0; n < r.report->branches.size(); ++n) {
    const auto& b = r.report->branches[n];
    if (!b.atlas) continue;
    const auto& q = b.atlas->quality;
    a.push_back({{"branch", n + 1},
                 {"inverse_residual", q.inverse_residual},
                 {"cocycle_residual", q.cocycle_residual},
                 {"metric_residual", q.metric_residual},
                 {"c2_bound", q.c2_bound},
                 {"min_eigenvalue", num(q.min_eigenvalue)},
                 {"max_condition", num(q.max_condition)},
                 {"flat_deviation", q.flat_deviation},
                 {"triples_checked", q.triples_checked},
                 {"overlap_pairs", q.overlap_pairs},
                 {"certified_pairs", b.atlas->gluing.certified_pairs},
                 {"computed_pairs", b.atlas->gluing.computed_pairs},
                 {"step_increments", nums(b.atlas->gluing.step_increments)},
                 {"metrics_converged", q.metrics_converged}});
  }
  return a;
}

void write_curve_csv(const std::vector<int>& ks, const std::vector<double>& values, const std::filesystem::path& path) {
  std::string text = "k,value\n";
  char buf[64];
  for (std::size_t i = 0; i < values.size() && i < ks.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", ks[i], values[i]);
    text += buf;
  }
  write_text(path, text);
}

void write_outputs(const verification::SuiteResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "payloads", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (dir / "payloads").string());
  write_text(dir / "report.json", report_json(r, dir / "payloads").dump(2) + "\n");
  write_text(dir / "verdicts.json", verification::to_json(r.verdicts).dump(2) + "\n");
  write_text(dir / "atlas_quality.json", atlas_quality_json(r).dump(2) + "\n");
  const std::vector<double> none;
  const auto& ks = r.config.k_schedule;
  write_curve_csv(ks, r.report ? r.report->remainder_curve : none, dir / "remainder.csv");
  write_curve_csv(ks, r.report ? r.report->separation_curve : none, dir / "separation.csv");
}

void print_summary(const verification::SuiteResult& r, std::ostream& os) {
  os << "scenario " << r.config.name << " (" << r.config.catalog_id << ", " << r.config.family_id << ")\n";
  if (r.report) {
    os << "  branches " << r.report->branches.size() << ", stop: " << r.report->stop_reason << "\n";
  }
  for (const auto& e : r.errors) os << "  error in " << e.stage << ": " << e.message << "\n";
  os << "  " << std::left << std::setw(24) << "check" << std::setw(16) << "status" << "measured\n";
  for (const auto& v : r.verdicts) {
    os << "  " << std::left << std::setw(24) << v.name << std::setw(16) << verification::to_string(v.outcome);
    for (std::size_t i = 0; i < v.measured.size(); ++i) {
      os << (i ? " " : "") << std::setprecision(6) << v.measured[i];
    }
    if (!v.notes.empty()) os << "  (" << v.notes << ")";
    os << "\n";
  }
}

}  // namespace conclab::report
