#pragma once

// Scenario files, run/sweep/oracle commands and their on-disk artifacts.

#include "mgflow/serialize.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mgflow {

/// Exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerics = 2, kExitMismatch = 3, kExitVerify = 4 };

/// Invalid scenario; carries every violation found, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct OutputOptions {
  std::string directory;                 ///< may be overridden on the command line
  std::uint64_t snapshot_stride = 0;     ///< loop CSV every k-th record; 0 disables
  std::uint64_t checkpoint_stride = 10;  ///< checkpoint every k-th record; 0 only at the end
  bool operator==(const OutputOptions&) const = default;
};

struct ScenarioConfig {
  SurfaceModel surface = SurfaceModel::flat_torus();
  MagneticField field = MagneticField::constant(0.0);
  LoopGenerator initial;
  std::size_t n = kDefaultSamples;
  double circle_length = kTwoPi;
  FlowConfig flow;
  OutputOptions output;
  std::optional<Classification> expect;

  bool operator==(const ScenarioConfig&) const = default;
};

ScenarioConfig parse_config_json(const json& j);
/// Throws ConfigError (missing file, syntax, constraint violations).
ScenarioConfig parse_config(const std::filesystem::path& path);
json config_to_json(const ScenarioConfig& config);
/// Hex SHA-256 of the canonical JSON dump.
std::string config_hash(const ScenarioConfig& config);

struct RunOptions {
  bool resume = false;
  /// Stop (and checkpoint) after this many new records; 0 runs to completion.
  std::uint64_t halt_after_records = 0;
  std::optional<Classification> expect;  ///< overrides config.expect
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = kExitOk;
  json manifest;
  std::optional<FlowOutcome> outcome;
};

/// Writes diagnostics.csv, snapshots/, final_loop.csv, checkpoint.json and manifest.json into out_dir.
RunResult cmd_run(const ScenarioConfig& config, const std::filesystem::path& out_dir, const RunOptions& options = {});

/// "field.B0" or "/field/B0".
std::string to_json_pointer(const std::string& path);

struct SweepResult {
  int exit_code = kExitOk;
  std::vector<RunResult> runs;  ///< ordered as the input values
};

/// One isolated run per value under out_dir, summary.csv afterwards. Parallelism capped by MGFLOW_THREADS.
SweepResult cmd_sweep(const json& base_config, const std::string& param_path, const std::vector<double>& values,
                      const std::filesystem::path& out_dir, std::ostream* log = nullptr);

unsigned sweep_threads();

/// Case parameters by name; strings (geometry) are passed separately.
struct OracleRequest {
  std::string case_id;
  std::map<std::string, double> params;
  std::string geometry = "Sphere";
};

/// Writes the oracle CSV; throws ConfigError for unknown cases or bad parameters.
void cmd_oracle(const OracleRequest& request, std::ostream& os);

}  // namespace mgflow
