// mgflow: run, sweep, oracle and verify commands.

#include "mgflow/scenario.hpp"
#include "mgflow/verify.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <fstream>
#include <iostream>

using namespace mgflow;

namespace {

int report_config_error(const ConfigError& e) {
  std::cerr << "configuration error:\n";
  for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
  return kExitConfig;
}

std::optional<double> parse_double(std::string_view text) {
  double x = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return x;
}

// "--B0 0.5", "--B0=0.5" and "B0=0.5" are all accepted for oracle parameters.
std::map<std::string, double> oracle_params(const std::vector<std::string>& extras, std::string& geometry) {
  std::map<std::string, double> params;
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string token = extras[i];
    std::string key, value;
    if (token.rfind("--", 0) == 0) token = token.substr(2);
    if (auto eq = token.find('='); eq != std::string::npos) {
      key = token.substr(0, eq);
      value = token.substr(eq + 1);
    } else if (extras[i].rfind("--", 0) == 0 && i + 1 < extras.size()) {
      key = token;
      value = extras[++i];
    } else {
      bad.push_back("cannot parse oracle argument '" + extras[i] + "'");
      continue;
    }
    if (key == "geometry") {
      geometry = value;
      continue;
    }
    if (auto x = parse_double(value)) {
      params[key] = *x;
    } else {
      bad.push_back("oracle parameter " + key + ": '" + value + "' is not a number");
    }
  }
  if (!bad.empty()) throw ConfigError(bad);
  return params;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::vector<std::string> bad;
  std::size_t start = 0;
  while (start <= list.size() && !list.empty()) {
    const auto comma = list.find(',', start);
    const std::string item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (auto x = parse_double(item)) {
      values.push_back(*x);
    } else {
      bad.push_back("--values: '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!bad.empty()) throw ConfigError(bad);
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic heat flow of closed curves on model surfaces"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  std::string config_path, out_dir, expect;
  bool resume = false;
  std::uint64_t halt_after = 0;
  run_cmd->add_option("--config", config_path, "scenario JSON")->required();
  run_cmd->add_option("--out", out_dir, "output directory (defaults to output.directory)");
  run_cmd->add_option("--expect", expect, "expected classification");
  run_cmd->add_flag("--resume", resume, "continue from checkpoint.json in the output directory");
  run_cmd->add_option("--halt-after", halt_after, "stop after this many records");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario per parameter value");
  std::string param, values_text;
  sweep_cmd->add_option("--config", config_path, "base scenario JSON")->required();
  sweep_cmd->add_option("--param", param, "numeric field, e.g. field.B0")->required();
  sweep_cmd->add_option("--values", values_text, "comma separated values")->required();
  sweep_cmd->add_option("--out", out_dir, "output directory (defaults to output.directory)");

  auto* oracle_cmd = app.add_subcommand("oracle", "Closed-form reference series");
  std::string case_id, oracle_out;
  oracle_cmd->add_option("--case", case_id, "torus-mode, torus-drift, sphere-theta, hyperbolic-theta, "
                                            "latitude-geodesic or plane-circle")
      ->required();
  oracle_cmd->add_option("--out", oracle_out, "CSV path (stdout when omitted)");
  oracle_cmd->allow_extras();

  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance criteria");
  std::string suite = "fast";
  verify_cmd->add_option("--suite", suite, "fast or full")->check(CLI::IsMember({"fast", "full"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      const ScenarioConfig config = parse_config(config_path);
      RunOptions options;
      options.resume = resume;
      options.halt_after_records = halt_after;
      options.log = &std::cerr;
      if (!expect.empty()) options.expect = classification_from_string(expect);
      const auto result = cmd_run(config, out_dir.empty() ? config.output.directory : out_dir, options);
      std::cout << result.manifest.dump(2) << '\n';
      return result.exit_code;
    }
    if (sweep_cmd->parsed()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError({"cannot open " + config_path});
      json base;
      try {
        base = json::parse(is);
      } catch (const json::exception& e) {
        throw ConfigError({config_path + ": " + e.what()});
      }
      if (out_dir.empty()) out_dir = parse_config_json(base).output.directory;
      const auto result = cmd_sweep(base, param, parse_values(values_text), out_dir, &std::cerr);
      std::ifstream summary(std::filesystem::path(out_dir) / "summary.csv");
      std::cout << summary.rdbuf();
      return result.exit_code;
    }
    if (oracle_cmd->parsed()) {
      OracleRequest request;
      request.case_id = case_id;
      request.params = oracle_params(oracle_cmd->remaining(), request.geometry);
      if (oracle_out.empty()) {
        cmd_oracle(request, std::cout);
      } else {
        std::ofstream os(oracle_out);
        if (!os) throw ConfigError({"cannot write " + oracle_out});
        cmd_oracle(request, os);
      }
      return kExitOk;
    }
    if (verify_cmd->parsed()) return cmd_verify(suite_from_string(suite), std::cout);
  } catch (const ConfigError& e) {
    return report_config_error(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
