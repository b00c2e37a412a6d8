#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace conclab::app {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kPipelineError = 2, kConfigError = 3 };

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::optional<double> spacing;
  std::optional<int> kmax;
  bool quiet = false;
};

// Output directory precedence: --out, then CONCLAB_OUTPUT_DIR, then the config.
int run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out, std::ostream& err);
int validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
// Names of the *.json scenarios in dir, sorted.
std::vector<std::string> list_scenarios(const std::filesystem::path& dir);

}  // namespace conclab::app
