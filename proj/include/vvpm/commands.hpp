#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "vvpm/config.hpp"

namespace vvpm {

struct CommandOptions {
  std::optional<std::string> out;  // overrides the config's output path; stdout when neither is set
  bool full_grid = false;          // emit every path sample instead of at most 256
  int threads = 1;
};

enum ExitCode { Success = 0, ConfigFailure = 1, NumericalFailure = 2 };

/// Reports as JSON documents; `ok` tells whether every computation succeeded
/// (and, for verify, every residual passed).
struct Report {
  nlohmann::json body;
  bool ok = true;
};

/// Throws ConfigError for method/model combinations that cannot be evaluated.
void validate_methods(const ScenarioConfig& c);

Report factor_report(const ScenarioConfig& c, bool full_grid);
Report verify_report(const ScenarioConfig& c);

struct SweepTable {
  std::string text;  // CSV or JSON, per the config's sweep_format
  bool ok = true;
};
SweepTable sweep_table(const ScenarioConfig& c, int threads);

int cmd_factor(const ScenarioConfig& c, const CommandOptions& opt);
int cmd_verify(const ScenarioConfig& c, const CommandOptions& opt);
int cmd_sweep(const ScenarioConfig& c, const CommandOptions& opt);
int cmd_models(std::ostream& out);

/// JSON text of a report: two-space indent, trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace vvpm
