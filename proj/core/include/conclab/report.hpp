#pragma once

#include "conclab/verification.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <ostream>

namespace conclab::report {

// Full run record. Contains no paths or timings, so equal inputs give equal
// bytes.
nlohmann::json report_json(const verification::SuiteResult& r, const std::filesystem::path& payload_dir = {});
nlohmann::json atlas_quality_json(const verification::SuiteResult& r);

// Curve as CSV with header "k,value", values with 17 significant digits.
void write_curve_csv(const std::vector<int>& ks, const std::vector<double>& values, const std::filesystem::path& path);

// report.json, verdicts.json, remainder.csv, separation.csv,
// atlas_quality.json and payloads/ under dir.
void write_outputs(const verification::SuiteResult& r, const std::filesystem::path& dir);

// Verdict table for terminals.
void print_summary(const verification::SuiteResult& r, std::ostream& os);

}  // namespace conclab::report
