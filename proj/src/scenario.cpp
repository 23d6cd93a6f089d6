#include "mgflow/scenario.hpp"

#include "mgflow/analysis.hpp"
#include "mgflow/analytic.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace mgflow {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : "\n") + s;
  return out;
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool generator_fits(GeneratorKind g, SurfaceKind s) {
  switch (g) {
    case GeneratorKind::FourierMode:
    case GeneratorKind::PlaneCircle: return s == SurfaceKind::Plane || s == SurfaceKind::FlatTorus;
    case GeneratorKind::TorusGraph: return s == SurfaceKind::FlatTorus;
    case GeneratorKind::SphereLatitude: return s == SurfaceKind::Sphere;
    case GeneratorKind::HyperbolicLatitude: return s == SurfaceKind::Hyperboloid;
    case GeneratorKind::ExplicitSamples: return true;
  }
  return false;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(join(violations)), violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// Parsing

ScenarioConfig parse_config_json(const json& j) {
  std::vector<std::string> problems;
  const Issues issues(&problems);
  ScenarioConfig c;
  JsonReader root(j, "", issues);
  if (!root.ok()) throw ConfigError(problems);

  if (const json* s = root.object("surface")) c.surface = surface_from_json(*s, "/surface", issues);
  if (const json* f = root.object("field")) c.field = field_from_json(*f, "/field", issues);
  const std::size_t before_initial = problems.size();
  if (const json* g = root.object("initial")) c.initial = generator_from_json(*g, "/initial", issues);
  const bool initial_ok = problems.size() == before_initial && root.has("initial");

  if (const json* d = root.object("discretization", false)) {
    JsonReader r(*d, "/discretization", issues);
    const auto n = r.integer("n", static_cast<std::int64_t>(kDefaultSamples), false);
    if (n < static_cast<std::int64_t>(kMinSamples)) {
      issues.add(r.path("n"), "discretization.n ≥ 8 (got " + std::to_string(n) + ")");
    } else {
      c.n = static_cast<std::size_t>(n);
    }
    c.circle_length = r.number("circle_length", kTwoPi, false);
    if (!(c.circle_length > 0.0)) {
      issues.add(r.path("circle_length"), "must be positive");
      c.circle_length = kTwoPi;
    }
    const std::string policy = r.string("dt_policy", "FixedCFL", false);
    if (policy == "FixedCFL") {
      c.flow.dt_policy = DtPolicy::FixedCFL;
      c.flow.safety = r.number("safety", 0.9, false);
      if (!(c.flow.safety > 0.0 && c.flow.safety <= 1.0)) issues.add(r.path("safety"), "must lie in (0, 1]");
    } else if (policy == "Explicit") {
      c.flow.dt_policy = DtPolicy::Explicit;
      c.flow.dt = r.number("dt", 0.0);
      if (!(c.flow.dt > 0.0)) issues.add(r.path("dt"), "must be positive");
    } else {
      issues.add(r.path("dt_policy"), "expected \"FixedCFL\" or \"Explicit\"");
    }
  }

  if (const json* run = root.object("run", false)) {
    JsonReader r(*run, "/run", issues);
    auto positive = [&](const char* key, double& slot) {
      slot = r.number(key, slot, false);
      if (!(slot > 0.0)) issues.add(r.path(key), "must be positive");
    };
    positive("t_max", c.flow.t_max);
    positive("tol_residual", c.flow.tol_residual);
    positive("tol_point", c.flow.tol_point);
    positive("divergence_threshold", c.flow.divergence_threshold);
    const auto stride = r.integer("record_stride", static_cast<std::int64_t>(c.flow.record_stride), false);
    if (stride < 1) {
      issues.add(r.path("record_stride"), "must be at least 1");
    } else {
      c.flow.record_stride = static_cast<std::uint64_t>(stride);
    }
  }

  if (const json* out = root.object("output", false)) {
    JsonReader r(*out, "/output", issues);
    c.output.directory = r.string("directory", "", false);
    const auto snap = r.integer("snapshot_stride", 0, false);
    const auto ckpt = r.integer("checkpoint_stride", 10, false);
    if (snap < 0) issues.add(r.path("snapshot_stride"), "must be >= 0");
    if (ckpt < 0) issues.add(r.path("checkpoint_stride"), "must be >= 0");
    c.output.snapshot_stride = static_cast<std::uint64_t>(std::max<std::int64_t>(0, snap));
    c.output.checkpoint_stride = static_cast<std::uint64_t>(std::max<std::int64_t>(0, ckpt));
  }

  if (root.has("expect")) {
    const json& e = j.at("expect");
    std::string name;
    if (e.is_string()) {
      name = e.get<std::string>();
    } else {
      name = JsonReader(e, "/expect", issues).string("classification", "");
    }
    if (!name.empty()) {
      try {
        c.expect = classification_from_string(name);
      } catch (const Error& err) {
        issues.add("/expect/classification", err.what());
      }
    }
  }

  // cross-block rules
  if (c.field.kind() == FieldKind::ExactPotential && c.surface.kind() != SurfaceKind::FlatTorus) {
    issues.add("/field/kind", "exact potential only on FlatTorus");
  }
  if (initial_ok) {
    if (!generator_fits(c.initial.kind, c.surface.kind())) {
      issues.add("/initial/kind", std::string(to_string(c.initial.kind)) + " curves do not live on " +
                                      std::string(to_string(c.surface.kind())));
    } else if (problems.empty()) {
      try {
        (void)make_loop(c.initial, c.surface, c.n, c.circle_length);
      } catch (const Error& e) {
        issues.add("/initial", e.what());
      }
    }
  }

  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

ScenarioConfig parse_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError({path.string() + ": cannot open config file"});
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": malformed JSON: " + e.what()});
  }
  return parse_config_json(j);
}

json config_to_json(const ScenarioConfig& c) {
  json disc{{"n", c.n}, {"circle_length", c.circle_length}};
  json run{{"t_max", c.flow.t_max},
           {"tol_residual", c.flow.tol_residual},
           {"tol_point", c.flow.tol_point},
           {"divergence_threshold", c.flow.divergence_threshold},
           {"record_stride", c.flow.record_stride}};
  if (c.flow.dt_policy == DtPolicy::FixedCFL) {
    disc["dt_policy"] = "FixedCFL";
    disc["safety"] = c.flow.safety;
  } else {
    disc["dt_policy"] = "Explicit";
    disc["dt"] = c.flow.dt;
  }
  json j{{"surface", to_json(c.surface)},
         {"field", to_json(c.field)},
         {"initial", to_json(c.initial)},
         {"discretization", std::move(disc)},
         {"run", std::move(run)},
         {"output",
          {{"directory", c.output.directory},
           {"snapshot_stride", c.output.snapshot_stride},
           {"checkpoint_stride", c.output.checkpoint_stride}}}};
  if (c.expect) j["expect"] = {{"classification", std::string(to_string(*c.expect))}};
  return j;
}

std::string config_hash(const ScenarioConfig& config) {
  const std::string text = config_to_json(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return os.str();
}

// ---------------------------------------------------------------------------
// run

namespace {

json record_to_json(const DiagnosticsRecord& r) {
  json j{{"time", r.time},
         {"kinetic", r.kinetic},
         {"dissipation", r.dissipation},
         {"flux_term", r.flux_term},
         {"residual_l2", r.residual_l2},
         {"speed_min", r.speed_min},
         {"speed_max", r.speed_max},
         {"diameter", r.diameter},
         {"ottarsson_lhs", r.ottarsson_lhs},
         {"ottarsson_rhs", r.ottarsson_rhs}};
  j["magnetic"] = r.magnetic ? json(*r.magnetic) : json(nullptr);
  return j;
}

// Keeps the header and the first `rows` data lines.
void truncate_csv(const fs::path& path, std::uint64_t rows) {
  std::ifstream is(path);
  if (!is) throw Error("cannot reopen " + path.string() + " for resume");
  std::string header, line, kept;
  std::getline(is, header);
  if (header != kDiagnosticsHeader) throw Error(path.string() + ": unexpected header");
  kept = header + "\n";
  for (std::uint64_t i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw Error(path.string() + ": fewer rows than the checkpoint recorded");
    kept += line + "\n";
  }
  is.close();
  std::ofstream os(path, std::ios::trunc);
  os << kept;
}

void write_manifest(const fs::path& path, const json& manifest) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << manifest.dump(2) << '\n';
}

}  // namespace

RunResult cmd_run(const ScenarioConfig& config, const fs::path& out_dir, const RunOptions& options) {
  RunResult result;
  auto log = [&](const std::string& msg) {
    if (options.log) *options.log << msg << '\n';
  };
  if (out_dir.empty()) {
    result.exit_code = kExitConfig;
    result.manifest = {{"status", "error"}, {"error", "empty output directory"}};
    log("error: empty output directory");
    return result;
  }

  const auto started = std::chrono::steady_clock::now();
  const fs::path diag_path = out_dir / "diagnostics.csv";
  const fs::path snap_dir = out_dir / "snapshots";
  const fs::path final_path = out_dir / "final_loop.csv";
  const fs::path ckpt_path = out_dir / "checkpoint.json";
  const fs::path manifest_path = out_dir / "manifest.json";

  std::optional<FlowState> start;
  std::uint64_t records_written = 0;
  try {
    config.field.require_compatible(config.surface);
    config.flow.validate();
    DiscreteLoop initial = make_loop(config.initial, config.surface, config.n, config.circle_length);
    fs::create_directories(out_dir);
    if (config.output.snapshot_stride > 0) fs::create_directories(snap_dir);
    if (options.resume) {
      Checkpoint cp = load_checkpoint(ckpt_path);
      if (!(cp.field == config.field) || !(cp.state.loop.surface() == config.surface) ||
          cp.state.loop.size() != config.n || cp.state.loop.circle_length() != config.circle_length) {
        throw ConfigError({"checkpoint does not belong to this scenario"});
      }
      truncate_csv(diag_path, cp.records_written);
      records_written = cp.records_written;
      start.emplace(std::move(cp.state));
      log("resuming at t = " + fmt17(start->time) + " after " + std::to_string(records_written) + " records");
    } else {
      std::ofstream os(diag_path, std::ios::trunc);
      if (!os) throw Error("cannot write " + diag_path.string());
      os << kDiagnosticsHeader << '\n';
      start.emplace(std::move(initial));
    }
  } catch (const Error& e) {
    result.exit_code = kExitConfig;
    result.manifest = {{"status", "error"}, {"error", e.what()}};
    log(std::string("error: ") + e.what());
    return result;
  }

  std::ofstream diag(diag_path, std::ios::app);
  const std::uint64_t resumed_from = records_written;
  RunHooks hooks;
  hooks.skip_initial_record = options.resume;
  hooks.on_record = [&](const FlowState& s, const DiagnosticsRecord& rec) {
    write_diagnostics_row(diag, rec);
    diag.flush();
    ++records_written;
    if (config.output.snapshot_stride > 0 && records_written % config.output.snapshot_stride == 0) {
      char name[48];
      std::snprintf(name, sizeof name, "record_%08llu.csv", static_cast<unsigned long long>(records_written));
      std::ofstream os(snap_dir / name);
      write_loop_csv(os, s.loop);
    }
    if (config.output.checkpoint_stride > 0 && records_written % config.output.checkpoint_stride == 0) {
      save_checkpoint(ckpt_path, {s, config.field, records_written});
    }
  };
  if (options.halt_after_records > 0) {
    hooks.halt = [&] { return records_written - resumed_from >= options.halt_after_records; };
  }

  std::optional<FlowOutcome> ran;
  try {
    ran.emplace(run(std::move(*start), config.field, config.flow, hooks));
  } catch (const Error& e) {
    // run() converts numerical failures itself; what reaches here is an unusable step size
    result.exit_code = kExitConfig;
    result.manifest = {{"status", "error"}, {"error", e.what()}};
    log(std::string("error: ") + e.what());
    return result;
  }
  FlowOutcome& outcome = *ran;
  diag.close();
  save_checkpoint(ckpt_path, {outcome.final, config.field, records_written});

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json artifacts{{"diagnostics", diag_path.string()}, {"checkpoint", ckpt_path.string()},
                 {"manifest", manifest_path.string()}};
  json snapshots = json::array();
  if (fs::exists(snap_dir)) {
    std::set<std::string> names;
    for (const auto& entry : fs::directory_iterator(snap_dir)) names.insert(entry.path().string());
    for (const auto& name : names) snapshots.push_back(name);
  }
  artifacts["snapshots"] = std::move(snapshots);

  const auto expected = options.expect ? options.expect : config.expect;
  json manifest{{"config_hash", config_hash(config)},
                {"config", config_to_json(config)},
                {"wall_time_s", wall},
                {"steps", outcome.final.steps},
                {"time", outcome.final.time},
                {"records", records_written}};

  if (outcome.halted) {
    manifest["status"] = "halted";
    manifest["artifacts"] = std::move(artifacts);
    write_manifest(manifest_path, manifest);
    log("halted at t = " + fmt17(outcome.final.time) + "; resume with --resume");
    result.manifest = std::move(manifest);
    result.outcome = std::move(outcome);
    return result;
  }

  {
    std::ofstream os(final_path);
    write_loop_csv(os, outcome.final.loop);
  }
  artifacts["final_loop"] = final_path.string();
  manifest["status"] = "complete";
  manifest["artifacts"] = std::move(artifacts);
  manifest["classification"] = std::string(to_string(outcome.classification));
  manifest["blowup"] = outcome.blowup;
  manifest["note"] = outcome.note;
  manifest["winding"] = winding(outcome.final.loop);
  if (!outcome.series.empty()) manifest["final"] = record_to_json(outcome.series.back());
  if (expected) manifest["expected"] = std::string(to_string(*expected));

  if (outcome.blowup) {
    result.exit_code = kExitNumerics;
  } else if (expected && *expected != outcome.classification) {
    result.exit_code = kExitMismatch;
  }
  manifest["exit_code"] = result.exit_code;
  write_manifest(manifest_path, manifest);
  log(std::string(to_string(outcome.classification)) + " at t = " + fmt17(outcome.final.time) + " after " +
      std::to_string(outcome.final.steps) + " steps" + (outcome.note.empty() ? "" : " (" + outcome.note + ")"));
  result.manifest = std::move(manifest);
  result.outcome = std::move(outcome);
  return result;
}

// ---------------------------------------------------------------------------
// sweep

std::string to_json_pointer(const std::string& path) {
  if (path.empty()) throw ConfigError({"empty parameter path"});
  if (path.front() == '/') return path;
  std::string out;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError({"malformed parameter path '" + path + "'"});
    out += "/" + part;
  }
  return out;
}

unsigned sweep_threads() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MGFLOW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) cap = static_cast<unsigned>(v);
  }
  return cap;
}

SweepResult cmd_sweep(const json& base_config, const std::string& param_path, const std::vector<double>& values,
                      const fs::path& out_dir, std::ostream* log) {
  if (values.empty()) throw ConfigError({"no sweep values given"});
  if (out_dir.empty()) throw ConfigError({"empty output directory"});
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(to_json_pointer(param_path));
  } catch (const json::exception& e) {
    throw ConfigError({"bad parameter path '" + param_path + "': " + e.what()});
  }
  if (!base_config.contains(ptr) || !base_config.at(ptr).is_number()) {
    throw ConfigError({ptr.to_string() + ": sweep target must be an existing numeric field"});
  }

  std::vector<ScenarioConfig> configs;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < values.size(); ++i) {
    json j = base_config;
    if (base_config.at(ptr).is_number_integer()) {
      if (values[i] != std::floor(values[i])) {
        problems.push_back(ptr.to_string() + ": value " + fmt17(values[i]) + " is not an integer");
        continue;
      }
      j[ptr] = static_cast<std::int64_t>(values[i]);
    } else {
      j[ptr] = values[i];
    }
    try {
      configs.push_back(parse_config_json(j));
    } catch (const ConfigError& e) {
      for (const auto& v : e.violations()) problems.push_back("value " + fmt17(values[i]) + ": " + v);
    }
  }
  if (!problems.empty()) throw ConfigError(problems);

  fs::create_directories(out_dir);
  SweepResult result;
  result.runs.resize(values.size());
  std::vector<fs::path> dirs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu", i);
    dirs[i] = out_dir / name;
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < values.size(); i = next++) {
      RunResult r = cmd_run(configs[i], dirs[i]);
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << ptr.to_string() << " = " << fmt17(values[i]) << ": "
             << (r.outcome ? std::string(to_string(r.outcome->classification)) : "error") << '\n';
      }
      result.runs[i] = std::move(r);
    }
  };
  const unsigned threads = std::min<unsigned>(sweep_threads(), static_cast<unsigned>(values.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream os(out_dir / "summary.csv");
  os << "value,classification,final_kinetic,final_residual,exit_code,directory\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& r = result.runs[i];
    os << fmt17(values[i]) << ',';
    if (r.outcome && !r.outcome->series.empty()) {
      const auto& last = r.outcome->series.back();
      os << to_string(r.outcome->classification) << ',' << fmt17(last.kinetic) << ',' << fmt17(last.residual_l2);
    } else {
      os << "NA,NA,NA";
    }
    os << ',' << r.exit_code << ',' << dirs[i].string() << '\n';
    result.exit_code = std::max(result.exit_code, r.exit_code == kExitMismatch ? kExitOk : r.exit_code);
  }
  return result;
}

// ---------------------------------------------------------------------------
// oracle

void cmd_oracle(const OracleRequest& req, std::ostream& os) {
  static const std::map<std::string, std::map<std::string, double>> defaults = {
      {"torus-mode", {{"k", 1}, {"a", 1}, {"b", 1}, {"B0", 1}, {"t", 0}, {"n", 64}}},
      {"torus-drift", {{"mu", 1}, {"B0", 0.5}, {"t", 0}, {"n", 64}}},
      {"sphere-theta", {{"B0", 0.5}, {"theta0", 1.2}, {"t_end", 20}, {"dt", 0.01}}},
      {"hyperbolic-theta", {{"B0", 2}, {"theta0", 0.5}, {"t_end", 10}, {"dt", 0.01}}},
      {"latitude-geodesic", {{"B0", 0.5}, {"theta0", kPi / 3}, {"n", 64}}},
      {"plane-circle", {{"B0", 1}, {"speed", 1}, {"n", 64}}},
  };
  auto it = defaults.find(req.case_id);
  if (it == defaults.end()) throw ConfigError({"unknown oracle case '" + req.case_id + "'"});
  auto p = it->second;
  std::vector<std::string> problems;
  for (const auto& [key, value] : req.params) {
    if (!p.count(key)) {
      problems.push_back("oracle case " + req.case_id + " has no parameter '" + key + "'");
    } else {
      p[key] = value;
    }
  }
  if (p.count("n") && !(p["n"] >= 1 && p["n"] == std::floor(p["n"]))) problems.push_back("n must be a positive integer");
  if (!problems.empty()) throw ConfigError(problems);

  const std::size_t n = p.count("n") ? static_cast<std::size_t>(p["n"]) : 0;
  auto grid = [&](int comps, auto&& point) {
    os << (comps == 2 ? "s,x1,x2\n" : "s,x1,x2,x3\n");
    for (std::size_t i = 0; i < n; ++i) {
      const double s = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
      const Vec3 x = point(s);
      os << fmt17(s);
      for (int c = 0; c < comps; ++c) os << ',' << fmt17(x[c]);
      os << '\n';
    }
  };

  try {
    const std::string& id = req.case_id;
    if (id == "torus-mode") {
      if (p["k"] != std::floor(p["k"])) throw Error("k must be an integer");
      const TorusModeParams tp{static_cast<int>(p["k"]), p["a"], p["b"], p["B0"]};
      tp.validate();
      grid(2, [&](double s) { return torus_mode(tp, s, p["t"]); });
    } else if (id == "torus-drift") {
      grid(2, [&](double s) { return torus_drift(p["mu"], p["B0"], s, p["t"]); });
    } else if (id == "sphere-theta" || id == "hyperbolic-theta") {
      const Geometry g = id == "sphere-theta" ? Geometry::Sphere : Geometry::Hyperboloid;
      os << "t,theta\n";
      for (const auto& smp : latitude_ode_solve({p["theta0"], p["B0"], g}, p["t_end"], p["dt"])) {
        os << fmt17(smp.t) << ',' << fmt17(smp.theta) << '\n';
      }
    } else if (id == "latitude-geodesic") {
      Geometry g;
      if (req.geometry == "Sphere" || req.geometry == "sphere") {
        g = Geometry::Sphere;
      } else if (req.geometry == "Hyperboloid" || req.geometry == "hyperboloid") {
        g = Geometry::Hyperboloid;
      } else {
        throw Error("geometry must be Sphere or Hyperboloid");
      }
      latitude_geodesic(g, p["theta0"], p["B0"], 0.0);  // surfaces the undefined-rate error before any output
      grid(3, [&](double s) { return latitude_geodesic(g, p["theta0"], p["B0"], s); });
    } else {
      plane_circle(p["B0"], p["speed"], 0.0);
      grid(2, [&](double s) { return plane_circle(p["B0"], p["speed"], s); });
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError({req.case_id + ": " + e.what()});
  }
}

}  // namespace mgflow
