#include "mgflow/scenario.hpp"
#include "mgflow/verify.hpp"

#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace mgflow;
namespace fs = std::filesystem;

namespace {

json torus_json(double B0, std::size_t n = 64, double t_max = 50.0) {
  return {{"surface", {{"kind", "FlatTorus"}}},
          {"field", {{"kind", "ConstantStrength"}, {"B0", B0}}},
          {"initial", {{"kind", "FourierMode"}, {"k", 1}, {"a", 2.0}, {"b", 1.0}}},
          {"discretization", {{"n", n}, {"dt_policy", "FixedCFL"}, {"safety", 0.9}}},
          {"run", {{"t_max", t_max}, {"record_stride", 50}}},
          {"output", {{"directory", ""}, {"checkpoint_stride", 2}}}};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mgflow-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> violations_of(const json& j) {
  try {
    parse_config_json(j);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& vs, const std::string& needle) {
  for (const auto& v : vs) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_config examples") {
  TempDir tmp;
  const fs::path file = tmp.path / "torus.json";
  std::ofstream(file) << torus_json(1.0).dump(2);
  CHECK(parse_config(file).surface.kind() == SurfaceKind::FlatTorus);

  json small = torus_json(1.0);
  small["discretization"]["n"] = 4;
  const auto v = violations_of(small);
  CHECK(mentions(v, "discretization.n ≥ 8"));
  CHECK(mentions(v, "/discretization/n"));

  json exact = torus_json(1.0);
  exact["surface"] = {{"kind", "Sphere"}};
  exact["field"] = {{"kind", "ExactPotential"}, {"epsilon", 0.3}};
  exact["initial"] = {{"kind", "SphereLatitude"}, {"theta0", 1.0}};
  CHECK(mentions(violations_of(exact), "exact potential only on FlatTorus"));

  CHECK_THROWS_AS(parse_config(tmp.path / "missing.json"), ConfigError);
  std::ofstream(tmp.path / "bad.json") << "{\"surface\": ";
  CHECK_THROWS_AS(parse_config(tmp.path / "bad.json"), ConfigError);
}

TEST_CASE("all violations are reported, each with its path") {
  json j = torus_json(1.0);
  j["discretization"]["n"] = 3;
  j["run"]["t_max"] = -1.0;
  j["run"]["tol_point"] = 0.0;
  j["surface"]["kind"] = "Moebius";
  j["initial"]["k"] = 0;
  const auto v = violations_of(j);
  CHECK(v.size() >= 5);
  CHECK(mentions(v, "/run/t_max"));
  CHECK(mentions(v, "/run/tol_point"));
  CHECK(mentions(v, "/surface/kind"));
  CHECK(mentions(v, "/initial/k"));
}

TEST_CASE("generator must live on the surface") {
  json j = torus_json(1.0);
  j["initial"] = {{"kind", "SphereLatitude"}, {"theta0", 1.0}};
  CHECK(mentions(violations_of(j), "/initial/kind"));
}

TEST_CASE("property: config round-trips") {
  for (const auto& j : {torus_json(1.5),
                        json{{"surface", {{"kind", "Hyperboloid"}}},
                             {"field", {{"kind", "ConstantStrength"}, {"B0", 2.0}}},
                             {"initial", {{"kind", "HyperbolicLatitude"}, {"theta0", 0.5}, {"rate", 1.0}}},
                             {"discretization", {{"n", 32}, {"dt_policy", "Explicit"}, {"dt", 1e-4}}},
                             {"expect", "ConvergedNontrivial"}},
                        json{{"surface", {{"kind", "FlatTorus"}, {"periods", {3.0, 5.0}}}},
                             {"field", {{"kind", "ExactPotential"}, {"epsilon", 0.25}}},
                             {"initial", {{"kind", "FourierMode"}, {"k", 2}, {"a", 0.3}, {"b", 0.2}}},
                             {"output", {{"directory", "x"}, {"snapshot_stride", 3}}}}}) {
    const auto a = parse_config_json(j);
    const auto b = parse_config_json(config_to_json(a));
    CHECK(a == b);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 64);
  }
  CHECK(config_hash(parse_config_json(torus_json(1.0))) != config_hash(parse_config_json(torus_json(1.0 + 1e-12))));
}

TEST_CASE("cmd_run examples") {
  TempDir tmp;
  SUBCASE("B0=1 converges to a circle, artifacts exist") {
    auto cfg = parse_config_json(torus_json(1.0, 128));
    cfg.output.snapshot_stride = 5;
    const auto r = cmd_run(cfg, tmp.path / "b1");
    CHECK(r.exit_code == kExitOk);
    CHECK(r.manifest.at("classification") == "ConvergedNontrivial");
    CHECK(r.manifest.at("config_hash") == config_hash(cfg));
    for (const auto& [key, path] : r.manifest.at("artifacts").items()) {
      if (path.is_string()) {
        CHECK_MESSAGE(fs::exists(path.get<std::string>()), key);
      } else {
        for (const auto& p : path) CHECK_MESSAGE(fs::exists(p.get<std::string>()), key);
      }
    }
    CHECK(fs::exists(tmp.path / "b1" / "final_loop.csv"));
    CHECK(!fs::is_empty(tmp.path / "b1" / "snapshots"));
    const std::string diag = slurp(tmp.path / "b1" / "diagnostics.csv");
    CHECK(diag.rfind(kDiagnosticsHeader, 0) == 0);
  }
  SUBCASE("B0=2 diverges with exit 0") {
    const auto r = cmd_run(parse_config_json(torus_json(2.0, 64)), tmp.path / "b2");
    CHECK(r.exit_code == kExitOk);
    CHECK(r.manifest.at("classification") == "Diverged");
  }
  SUBCASE("expectation mismatch exits 3") {
    RunOptions o;
    o.expect = Classification::ConvergedPoint;
    CHECK(cmd_run(parse_config_json(torus_json(2.0, 64)), tmp.path / "m", o).exit_code == kExitMismatch);
  }
  SUBCASE("empty output directory exits 1") {
    CHECK(cmd_run(parse_config_json(torus_json(1.0)), "").exit_code == kExitConfig);
  }
}

TEST_CASE("determinism: identical configs give byte-identical diagnostics") {
  TempDir tmp;
  const auto cfg = parse_config_json(torus_json(1.1, 64, 3.0));
  REQUIRE(cmd_run(cfg, tmp.path / "a").exit_code == 0);
  REQUIRE(cmd_run(cfg, tmp.path / "b").exit_code == 0);
  const auto a = slurp(tmp.path / "a" / "diagnostics.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(tmp.path / "b" / "diagnostics.csv"));
  CHECK(slurp(tmp.path / "a" / "final_loop.csv") == slurp(tmp.path / "b" / "final_loop.csv"));
}

TEST_CASE("checkpoint resume at several record boundaries reproduces the diagnostics") {
  TempDir tmp;
  auto cfg = parse_config_json(torus_json(1.1, 64, 3.0));
  cfg.output.checkpoint_stride = 1;
  REQUIRE(cmd_run(cfg, tmp.path / "ref").exit_code == 0);
  std::ifstream ref_is(tmp.path / "ref" / "diagnostics.csv");
  const auto ref = read_diagnostics_csv(ref_is);
  for (std::uint64_t halt : {1u, 4u, 9u}) {
    const fs::path dir = tmp.path / ("h" + std::to_string(halt));
    RunOptions h;
    h.halt_after_records = halt;
    const auto first = cmd_run(cfg, dir, h);
    REQUIRE(first.outcome);
    CHECK(first.outcome->halted);
    CHECK(first.manifest.at("status") == "halted");
    RunOptions r;
    r.resume = true;
    const auto second = cmd_run(cfg, dir, r);
    CHECK(second.exit_code == 0);
    CHECK(second.manifest.at("status") == "complete");
    std::ifstream is(dir / "diagnostics.csv");
    const auto got = read_diagnostics_csv(is);
    REQUIRE(got.size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(x)); };
      CHECK(rel(got[i].kinetic, ref[i].kinetic) <= 1e-12);
      CHECK(rel(got[i].dissipation, ref[i].dissipation) <= 1e-12);
      CHECK(rel(got[i].flux_term, ref[i].flux_term) <= 1e-12);
      CHECK(rel(got[i].time, ref[i].time) <= 1e-12);
    }
  }
  RunOptions r;
  r.resume = true;
  CHECK(cmd_run(cfg, tmp.path / "nothing", r).exit_code == kExitConfig);
}

TEST_CASE("cmd_sweep examples") {
  TempDir tmp;
  SUBCASE("B0 threshold") {
    const auto r = cmd_sweep(torus_json(1.0, 64), "field.B0", {0.5, 1.0, 2.0}, tmp.path / "s");
    CHECK(r.exit_code == 0);
    REQUIRE(r.runs.size() == 3);
    CHECK(r.runs[0].outcome->classification == Classification::ConvergedPoint);
    CHECK(r.runs[1].outcome->classification == Classification::ConvergedNontrivial);
    CHECK(r.runs[2].outcome->classification == Classification::Diverged);
    std::istringstream summary(slurp(tmp.path / "s" / "summary.csv"));
    std::string line;
    std::getline(summary, line);
    CHECK(line == "value,classification,final_kinetic,final_residual,exit_code,directory");
    std::getline(summary, line);
    CHECK(line.rfind("0.5,ConvergedPoint,", 0) == 0);
  }
  SUBCASE("sphere latitudes") {
    const json base{{"surface", {{"kind", "Sphere"}}},
                    {"field", {{"kind", "ConstantStrength"}, {"B0", 0.5}}},
                    {"initial", {{"kind", "SphereLatitude"}, {"theta0", 1.0}}},
                    {"discretization", {{"n", 64}}},
                    {"run", {{"t_max", 50.0}}}};
    const auto r = cmd_sweep(base, "/initial/theta0", {0.5, kPi / 3, 1.2}, tmp.path / "l");
    const double limits[] = {0.0, kPi / 3, kPi};
    for (int i = 0; i < 3; ++i) {
      const auto& loop = r.runs[i].outcome->final.loop;
      double theta = 0.0;
      for (const auto& p : loop.samples()) theta += std::acos(std::clamp(p.z(), -1.0, 1.0)) / loop.size();
      CHECK(std::abs(theta - limits[i]) <= 2e-3);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cmd_sweep(torus_json(1.0), "field.B0", {}, tmp.path / "e"), ConfigError);
    CHECK_THROWS_AS(cmd_sweep(torus_json(1.0), "surface.kind", {1.0}, tmp.path / "e"), ConfigError);
    CHECK_THROWS_AS(cmd_sweep(torus_json(1.0), "field.nope", {1.0}, tmp.path / "e"), ConfigError);
    CHECK_THROWS_AS(cmd_sweep(torus_json(1.0), "discretization.n", {4.0}, tmp.path / "e"), ConfigError);
  }
  CHECK(to_json_pointer("field.B0") == "/field/B0");
  CHECK(to_json_pointer("/field/B0") == "/field/B0");
}

TEST_CASE("cmd_oracle examples") {
  auto rows = [](const OracleRequest& req) {
    std::ostringstream os;
    cmd_oracle(req, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    std::vector<std::vector<double>> out;
    while (std::getline(is, line)) {
      std::vector<double> row;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
      out.push_back(row);
    }
    return out;
  };
  const auto up = rows({"sphere-theta", {{"B0", 0.5}, {"theta0", 1.2}, {"t_end", 40}}, "Sphere"});
  for (std::size_t i = 1; i < up.size(); ++i) CHECK(up[i][1] >= up[i - 1][1]);
  CHECK(std::abs(up.back()[1] - kPi) <= 1e-6);

  const auto mode = rows({"torus-mode", {{"k", 1}, {"a", 1}, {"b", 1}, {"B0", 1}, {"t", 0}, {"n", 16}}, "Sphere"});
  REQUIRE(mode.size() == 16);
  for (const auto& r : mode) {
    CHECK(std::abs(r[1] - std::cos(r[0])) <= 1e-15);
    CHECK(std::abs(r[2] - std::sin(r[0])) <= 1e-15);
  }

  const auto hyp = rows({"hyperbolic-theta", {{"B0", 2}, {"theta0", 0.5}, {"t_end", 20}}, "Sphere"});
  CHECK(std::abs(hyp.back()[1] - 1.316958) <= 1e-6);

  CHECK(rows({"latitude-geodesic", {{"B0", 2}, {"theta0", std::acosh(2.0)}}, "Hyperboloid"}).size() == 64);
  CHECK(rows({"plane-circle", {}, "Sphere"}).size() == 64);
  CHECK(rows({"torus-drift", {{"t", 2}}, "Sphere"}).size() == 64);

  std::ostringstream sink;
  CHECK_THROWS_AS(cmd_oracle({"lorenz", {}, "Sphere"}, sink), ConfigError);
  CHECK_THROWS_AS(cmd_oracle({"torus-mode", {{"mu", 1}}, "Sphere"}, sink), ConfigError);
  CHECK_THROWS_AS(cmd_oracle({"latitude-geodesic", {}, "Torus"}, sink), ConfigError);
}

TEST_CASE("verify suite names") {
  CHECK(suite_from_string("fast") == Suite::Fast);
  CHECK(suite_from_string("full") == Suite::Full);
  CHECK_THROWS_AS(suite_from_string("quick"), Error);
  CriterionResult r{3, "x", true, "m", "e", 1.5};
  CHECK(format_result(r).rfind("[PASS]", 0) == 0);
}

TEST_CASE("mutation: flipping the Lorentz sign fails the torus threshold criterion") {
  const auto bad = check_torus_threshold(-1.0);
  INFO(format_result(bad));
  CHECK_FALSE(bad.pass);
}

TEST_CASE("command-line exit codes") {
  TempDir tmp;
  const std::string cli = MGFLOW_CLI;
  const fs::path cfg = tmp.path / "c.json";
  std::ofstream(cfg) << torus_json(1.0, 64).dump();
  const fs::path bad = tmp.path / "bad.json";
  json small = torus_json(1.0);
  small["discretization"]["n"] = 4;
  std::ofstream(bad) << small.dump();
  const std::string quiet = " >/dev/null 2>&1";

  CHECK(shell(cli + " run --config " + cfg.string() + " --out " + (tmp.path / "r").string() + quiet) == 0);
  CHECK(shell(cli + " run --config " + cfg.string() + " --out " + (tmp.path / "x").string() +
              " --expect ConvergedPoint" + quiet) == 3);
  CHECK(shell(cli + " run --config " + cfg.string() + quiet) == 1);  // empty output.directory
  CHECK(shell(cli + " run --config " + bad.string() + " --out " + (tmp.path / "y").string() + quiet) == 1);
  CHECK(shell(cli + " run --config " + (tmp.path / "nope.json").string() + " --out x" + quiet) == 1);
  CHECK(shell(cli + " sweep --config " + cfg.string() + " --param field.B0 --values 0.5,1 --out " +
              (tmp.path / "s").string() + quiet) == 0);
  CHECK(fs::exists(tmp.path / "s" / "summary.csv"));
  CHECK(shell(cli + " sweep --config " + cfg.string() + " --param field.B0 --values \"\" --out " +
              (tmp.path / "s2").string() + quiet) == 1);
  CHECK(shell(cli + " sweep --config " + cfg.string() + " --param surface.kind --values 1 --out " +
              (tmp.path / "s3").string() + quiet) == 1);
  CHECK(shell(cli + " oracle --case sphere-theta --B0 0.5 --theta0=1.2 --out " + (tmp.path / "o.csv").string() +
              quiet) == 0);
  CHECK(slurp(tmp.path / "o.csv").rfind("t,theta\n", 0) == 0);
  CHECK(shell(cli + " oracle --case latitude-geodesic --geometry Hyperboloid --B0 2 --theta0 1.3169578969248166" +
              quiet) == 0);
  CHECK(shell(cli + " oracle --case nope" + quiet) == 1);
  CHECK(shell(cli + " verify --suite slow" + quiet) == 1);
  CHECK(shell(cli + quiet) == 1);
}
