#include "conclab/app.hpp"

#include "conclab/config.hpp"
#include "conclab/error.hpp"
#include "conclab/report.hpp"
#include "conclab/verification.hpp"

#include <algorithm>
#include <cstdlib>

namespace conclab::app {

namespace {

bool config_error(const Error& e) {
  return e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ConstraintViolation ||
         e.code() == ErrorCode::UnsupportedExponent;
}

}  // namespace

int run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& out, std::ostream& err) {
  config::ScenarioConfig cfg;
  try {
    cfg = config::load_config(config_path);
    if (options.spacing) {
      cfg.spacing = *options.spacing;
      config::validate(cfg);
    }
    if (options.kmax) config::truncate_schedule(cfg, *options.kmax);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return config_error(e) ? kConfigError : kPipelineError;
  }
  std::filesystem::path dir = cfg.output_dir;
  if (const char* env = std::getenv("CONCLAB_OUTPUT_DIR"); env && *env) dir = env;
  if (options.out) dir = *options.out;

  const auto result = verification::run_suite(cfg);
  try {
    report::write_outputs(result, dir);
  } catch (const Error& e) {
    err << "output error: " << e.what() << "\n";
    return kPipelineError;
  }
  if (!options.quiet) report::print_summary(result, out);
  for (const auto& e : result.errors) err << "stage " << e.stage << " failed: " << e.message << "\n";
  if (result.hard_failure()) return kPipelineError;
  return result.any_failed() ? kCheckFailure : kOk;
}

int validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = config::load_config(config_path);
    out << config::to_json(cfg).dump(2) << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return config_error(e) ? kConfigError : kPipelineError;
  }
}

std::vector<std::string> list_scenarios(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace conclab::app
