#include "mgflow/verify.hpp"

#include "mgflow/analysis.hpp"
#include "mgflow/analytic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;

namespace mgflow {

namespace {

constexpr std::size_t kN = 256;
constexpr double kSafety = 0.9;

std::string g3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string short_name(Classification c) {
  switch (c) {
    case Classification::ConvergedNontrivial: return "Nontrivial";
    case Classification::ConvergedPoint: return "Point";
    case Classification::Diverged: return "Diverged";
    case Classification::Timeout: return "Timeout";
  }
  return "?";
}

FlowConfig desk_config(double t_max = 50.0) {
  FlowConfig c;
  c.safety = kSafety;
  c.t_max = t_max;
  return c;
}

double slack_for(const DiscreteLoop& loop) { return default_slack(stable_dt(loop, kSafety), loop.spacing()); }

double mean_latitude(const DiscreteLoop& loop) {
  double sum = 0.0;
  for (const auto& p : loop.samples()) {
    sum += loop.surface().kind() == SurfaceKind::Sphere ? std::acos(std::clamp(p.z(), -1.0, 1.0))
                                                        : std::acosh(std::max(1.0, p.x()));
  }
  return sum / static_cast<double>(loop.size());
}

double sup_distance(std::span<const Vec3> a, const std::function<Vec3(std::size_t)>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (a[i] - b(i)).norm());
  return worst;
}

// Every simulated series, kept for the criteria that range over all scenarios.
struct Recorded {
  std::string name;
  std::vector<DiagnosticsRecord> series;
  double slack = 0.0;
  double z_sup = 0.0;
};

struct Lab {
  Suite suite = Suite::Fast;
  std::vector<Recorded> runs;

  void keep(std::string name, std::vector<DiagnosticsRecord> series, const DiscreteLoop& initial,
            const MagneticField& field) {
    runs.push_back({std::move(name), std::move(series), slack_for(initial), field.sup_norm()});
  }
};

// Runs `run()` at desk resolution and stores the series.
FlowOutcome desk_run(Lab* lab, const std::string& name, const DiscreteLoop& initial, const MagneticField& field,
                     const FlowConfig& config, const RunHooks& hooks = {}) {
  FlowOutcome out = run(FlowState(initial), field, config, hooks);
  if (lab) lab->keep(name, out.series, initial, field);
  return out;
}

struct Check {
  bool pass = true;
  std::vector<std::string> measured;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    measured.push_back(what + (ok ? "" : " [FAIL]"));
  }
  std::string text() const {
    std::string out;
    for (const auto& m : measured) out += (out.empty() ? "" : "; ") + m;
    return out;
  }
};

// ---------------------------------------------------------------------------
// 1

CriterionResult torus_threshold(Lab* lab, double field_sign) {
  const double B0s[] = {0.5, 0.9, 1.0, 1.1, 2.0};
  const Classification want[] = {Classification::ConvergedPoint, Classification::ConvergedPoint,
                                 Classification::ConvergedNontrivial, Classification::Diverged,
                                 Classification::Diverged};
  Check chk;
  std::string got;
  bool classes_ok = true;
  double limit_err = std::numeric_limits<double>::infinity();
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 2.0, 1.0), kN);
  for (int i = 0; i < 5; ++i) {
    const MagneticField field = MagneticField::constant(field_sign * B0s[i]);
    // B0 = 0.9 and 1.1 need t ~ 70-80 to reach their tolerance
    const auto out = desk_run(lab, "torus k=1 a=2 b=1 B0=" + g3(B0s[i]), initial, field, desk_config(100.0));
    got += (got.empty() ? "" : ",") + short_name(out.classification);
    classes_ok = classes_ok && out.classification == want[i];
    if (B0s[i] == 1.0) {
      const auto& loop = out.final.loop;
      limit_err = sup_distance(loop.samples(), [&](std::size_t j) {
        const double s = loop.parameter(j);
        return Vec3(0.5 * std::cos(s), -0.5 * std::sin(s), 0.0);
      });
    }
  }
  chk.require(classes_ok, "classes {" + got + "}");
  chk.require(limit_err <= 5e-3, "B0=1 limit err " + g3(limit_err));
  return {1, "torus convergence threshold", chk.pass, chk.text(),
          "classes {Point,Point,Nontrivial,Diverged,Diverged}; limit err <= 5e-3"};
}

// ---------------------------------------------------------------------------
// 2, 3

struct TrackedMode {
  double worst = 0.0;
  double slack = 0.0;
  double flux_T = 0.0;
};

TrackedMode track_mode(Lab* lab, double B0, double T) {
  const TorusModeParams p{1, 1.0, 1.0, B0};
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 1.0, 1.0), kN);
  const MagneticField field = MagneticField::constant(B0);
  const double dt = stable_dt(initial, kSafety);
  TrackedMode out;
  out.slack = slack_for(initial);
  std::vector<DiagnosticsRecord> series{make_record(initial, field, 0.0, 0.0, 0.0)};
  auto compare = [&](const FlowState& st) {
    const auto& loop = st.loop;
    out.worst = std::max(out.worst, sup_distance(loop.samples(), [&](std::size_t j) {
                           return torus_mode(p, loop.parameter(j), st.time);
                         }));
  };
  const FlowState last = advance(FlowState(initial), field, T, dt, [&](const FlowState& st) {
    if (st.steps % 100 == 0) {
      compare(st);
      series.push_back(make_record(st.loop, field, st.time, st.dissipation, st.flux_term));
    }
  });
  compare(last);
  series.push_back(make_record(last.loop, field, last.time, last.dissipation, last.flux_term));
  out.flux_T = last.flux_term;
  if (lab) lab->keep("torus mode tracking B0=" + g3(B0), std::move(series), initial, field);
  return out;
}

CriterionResult closed_form_tracking(Lab& lab, std::vector<TrackedMode>& tracked) {
  Check chk;
  for (double B0 : {0.5, 1.0}) {
    tracked.push_back(track_mode(&lab, B0, 5.0));
    const auto& t = tracked.back();
    chk.require(t.worst <= t.slack, "B0=" + g3(B0) + " sup err " + g3(t.worst));
  }
  return {2, "torus closed-form tracking", chk.pass, chk.text(),
          "sup err <= 10(dt+h^2) = " + g3(tracked.front().slack) + " on t in [0,5]"};
}

CriterionResult magnetic_term(Lab& lab, const std::vector<TrackedMode>& tracked) {
  Check chk;
  const double B0s[] = {0.5, 1.0};
  for (int i = 0; i < 2; ++i) {
    const double exact = torus_magnetic_term({1, 1.0, 1.0, B0s[i]}, 5.0);
    const double err = std::abs(tracked[i].flux_T - exact);
    chk.require(err <= 5e-3, "B0=" + g3(B0s[i]) + " flux(5)=" + g3(tracked[i].flux_T) + " vs " + g3(exact));
  }
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 1.0, 1.0), kN);
  const auto out = desk_run(&lab, "torus k=1 a=b=1 B0=1 to convergence", initial, MagneticField::constant(1.0),
                            desk_config());
  const double limit = torus_magnetic_term({1, 1.0, 1.0, 1.0}, std::numeric_limits<double>::infinity());
  chk.require(std::abs(out.final.flux_term + kPi) <= 5e-3 && std::abs(limit + kPi) <= 1e-12,
              "flux(inf)=" + g3(out.final.flux_term) + " (" + short_name(out.classification) + " at t=" +
                  g3(out.final.time) + ")");
  return {3, "magnetic-term ledger", chk.pass, chk.text(), "closed form within 5e-3; T->inf value -pi +- 5e-3"};
}

// ---------------------------------------------------------------------------
// 4

CriterionResult drift(Lab& lab) {
  const DiscreteLoop initial = make_loop(LoopGenerator::torus_graph(1.0), kN);
  const MagneticField field = MagneticField::constant(0.5);
  double t1 = -1, z1 = 0, t5 = -1, z5 = 0;
  RunHooks hooks;
  hooks.on_record = [&](const FlowState& st, const DiagnosticsRecord&) {
    double zbar = 0.0;
    for (const auto& p : st.loop.samples()) zbar += p.y();
    zbar /= static_cast<double>(st.loop.size());
    if (t1 < 0 && st.time >= 1.0) t1 = st.time, z1 = zbar;
    if (t5 < 0 && st.time >= 5.0) t5 = st.time, z5 = zbar;
  };
  const auto out = desk_run(&lab, "torus drift mu=1 B0=0.5", initial, field, desk_config(), hooks);
  Check chk;
  const double rate = (t5 > t1 && t1 >= 0) ? (z5 - z1) / (t5 - t1) : std::nan("");
  chk.require(std::abs(rate - 0.5) <= 0.005, "mean-z rate " + g3(rate));
  chk.require(out.classification == Classification::Timeout, "class " + short_name(out.classification));
  const auto w = winding(out.final.loop);
  chk.require(w[0] == 1 && w[1] == 0, "winding (" + std::to_string(w[0]) + "," + std::to_string(w[1]) + ")");
  return {4, "drift scenario", chk.pass, chk.text(), "rate 0.5 +- 1%; Timeout; winding (1,0)"};
}

// ---------------------------------------------------------------------------
// 5, 6

CriterionResult sphere_latitudes(Lab& lab) {
  const double B0 = 0.5;
  const MagneticField field = MagneticField::constant(B0);
  const double starts[] = {0.5, kPi / 3.0, 1.2};
  const double limits[] = {0.0, kPi / 3.0, kPi};
  Check chk;
  for (int i = 0; i < 3; ++i) {
    const DiscreteLoop initial = make_loop(LoopGenerator::sphere_latitude(starts[i]), kN);
    const double dt = stable_dt(initial, kSafety);
    double ode_t = 0.0, ode_theta = starts[i], worst = 0.0;
    RunHooks hooks;
    hooks.on_record = [&](const FlowState& st, const DiagnosticsRecord&) {
      if (st.time > ode_t) {
        ode_theta = latitude_theta_at({ode_theta, B0, Geometry::Sphere}, st.time - ode_t, dt);
        ode_t = st.time;
      }
      worst = std::max(worst, std::abs(mean_latitude(st.loop) - ode_theta));
    };
    const auto out = desk_run(&lab, "sphere theta0=" + g3(starts[i]), initial, field, desk_config(), hooks);
    const double theta = mean_latitude(out.final.loop);
    const double slack = slack_for(initial);
    chk.require(worst <= slack, "theta0=" + g3(starts[i]) + " ode err " + g3(worst));
    chk.require(std::abs(theta - limits[i]) <= 1e-3, "limit " + g3(theta));
    if (i == 1) {
      const double res = geodesic_residual(initial, field);
      chk.require(res <= 5e-3, "stationary residual " + g3(res));
    }
  }
  return {5, "sphere latitude dynamics", chk.pass, chk.text(),
          "ode err <= 10(dt+h^2); limits {0, pi/3, pi} +- 1e-3; residual <= 5e-3"};
}

CriterionResult hyperbolic_stability(Lab& lab) {
  const MagneticField field = MagneticField::constant(2.0);
  const double target = std::acosh(2.0);
  Check chk;
  for (double th0 : {0.5, 2.5}) {
    const DiscreteLoop initial = make_loop(LoopGenerator::hyperbolic_latitude(th0), kN);
    const auto out = desk_run(&lab, "hyperbolic theta0=" + g3(th0), initial, field, desk_config());
    const auto& loop = out.final.loop;
    const double theta = mean_latitude(loop);
    const Vec3& p0 = loop.samples()[0];
    const double phase = std::atan2(p0.z(), p0.y());
    const double err = sup_distance(loop.samples(), [&](std::size_t j) {
      const double s = loop.parameter(j) + phase;
      return Vec3(2.0, std::sqrt(3.0) * std::cos(s), std::sqrt(3.0) * std::sin(s));
    });
    chk.require(out.classification == Classification::ConvergedNontrivial && std::abs(theta - target) <= 1e-3,
                "theta0=" + g3(th0) + " " + short_name(out.classification) + " theta=" + std::to_string(theta));
    chk.require(err <= 5e-3, "curve err " + g3(err));
  }
  return {6, "hyperbolic stability", chk.pass, chk.text(), "theta -> 1.316958 +- 1e-3; curve err <= 5e-3"};
}

// ---------------------------------------------------------------------------
// 7

double defect_over(std::size_t n, double T) {
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 2.0, 1.0), n);
  const double e0 = kinetic_energy(initial);
  double worst = 0.0;
  advance(FlowState(initial), MagneticField::constant(1.0), T, stable_dt(initial, kSafety), [&](const FlowState& st) {
    worst = std::max(worst, std::abs(kinetic_energy(st.loop) + st.dissipation + st.flux_term - e0));
  });
  return worst;
}

CriterionResult energy_identity(const Lab& lab) {
  Check chk;
  double worst_ratio = 0.0;
  std::string worst_name;
  for (const auto& r : lab.runs) {
    if (r.series.empty()) continue;
    const double d = energy_identity_defect(r.series, r.series.front().kinetic);
    if (d / r.slack > worst_ratio) worst_ratio = d / r.slack, worst_name = r.name;
  }
  chk.require(worst_ratio <= 1.0, "max defect/slack " + g3(worst_ratio) + " (" + worst_name + ") over " +
                                      std::to_string(lab.runs.size()) + " runs");
  std::vector<std::size_t> levels = {64, 128};
  if (lab.suite == Suite::Full) levels.push_back(256);
  std::vector<double> d;
  for (auto n : levels) d.push_back(defect_over(n, 1.0));
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    const double ratio = d[i] / d[i + 1];
    chk.require(ratio >= 1.8, "n " + std::to_string(levels[i]) + "->" + std::to_string(levels[i + 1]) + " factor " +
                                  g3(ratio));
  }
  return {7, "energy identity", chk.pass, chk.text(), "defect <= 10(dt+h^2) everywhere; refinement factor >= 1.8"};
}

// ---------------------------------------------------------------------------
// 8, 9, 10, 11

CriterionResult exact_monotonicity(Lab& lab) {
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 1.5, 0.7), kN);
  const MagneticField field = MagneticField::exact_torus(0.5);
  const auto out = desk_run(&lab, "torus exact eps=0.5", initial, field, desk_config());
  double lowest = std::numeric_limits<double>::infinity(), rise = 0.0;
  for (const auto& r : out.series) {
    const double E = r.kinetic + r.magnetic.value_or(std::nan(""));
    lowest = std::min(lowest, E);
    rise = std::max(rise, E - lowest);
    if (!std::isfinite(E)) rise = std::numeric_limits<double>::infinity();
  }
  Check chk;
  const double slack = slack_for(initial);
  chk.require(rise <= slack, "max energy rise " + g3(rise));
  chk.require(out.classification == Classification::ConvergedPoint ||
                  out.classification == Classification::ConvergedNontrivial,
              "class " + short_name(out.classification) + " at t=" + g3(out.final.time));
  return {8, "exact-field monotonicity", chk.pass, chk.text(),
          "rise <= 10(dt+h^2) = " + g3(slack) + "; converged"};
}

CriterionResult rescaling(Lab& lab) {
  const DiscreteLoop base = make_loop(LoopGenerator::fourier_mode(2, 2.0, 1.0), kN);
  const MagneticField field = MagneticField::constant(2.0);
  const double lambda = 0.5;
  const auto [scaled, scaled_field] = rescale(base, field, lambda);
  const double dt = stable_dt(base, kSafety);
  const double dt_scaled = stable_dt(scaled, kSafety);
  const double T = 2.0;

  std::vector<FlowState> base_states;
  advance(FlowState(base), field, lambda * lambda * T, dt, [&](const FlowState& st) {
    if (st.steps % 50 == 0) base_states.push_back(st);
  });
  double worst = 0.0;
  std::size_t compared = 0;
  std::vector<DiagnosticsRecord> series{make_record(scaled, scaled_field, 0.0, 0.0, 0.0)};
  advance(FlowState(scaled), scaled_field, T, dt_scaled, [&](const FlowState& st) {
    if (st.steps % 50 != 0) return;
    series.push_back(make_record(st.loop, scaled_field, st.time, st.dissipation, st.flux_term));
    const std::size_t k = st.steps / 50 - 1;
    if (k >= base_states.size()) return;
    const auto& b = base_states[k];
    // same grid index, time Lambda^2 t
    if (std::abs(b.time - lambda * lambda * st.time) > 1e-9 * (1.0 + st.time)) return;
    worst = std::max(worst, sup_distance(st.loop.samples(), [&](std::size_t j) { return b.loop.samples()[j]; }));
    ++compared;
  });
  lab.keep("rescaled torus k=2 B0=2 lambda=1/2", std::move(series), scaled, scaled_field);
  Check chk;
  const double slack = default_slack(dt, base.spacing());
  chk.require(compared > 0 && worst <= slack, "sup err " + g3(worst) + " at " + std::to_string(compared) + " times");
  return {9, "rescaling equivalence", chk.pass, chk.text(), "sup err <= 10(dt+h^2) = " + g3(slack) + " on t in [0,2]"};
}

CriterionResult decay_bound(Lab& lab) {
  const DiscreteLoop initial = make_loop(LoopGenerator::fourier_mode(1, 0.05, 0.05), kN);
  const MagneticField field = MagneticField::constant(0.5);
  const auto out = desk_run(&lab, "small torus circle eps=0.05 B0=0.5", initial, field, desk_config());
  const auto dc = kinetic_decay_check(initial, out.series, field.sup_norm(), kOttarssonFlat, slack_for(initial));
  Check chk;
  chk.require(dc.applicable && dc.holds, std::string(dc.applicable ? "applicable" : "not applicable") +
                                             ", max excess " + g3(dc.max_violation));
  chk.require(out.classification == Classification::ConvergedPoint, "class " + short_name(out.classification));
  return {10, "kinetic decay bound", chk.pass, chk.text(), "E_kin <= E_0 e^{-0.75t} + slack; Point"};
}

CriterionResult sup_bound(const Lab& lab) {
  Check chk;
  double worst_ratio = 0.0;
  int failures = 0;
  std::string equality;
  for (const auto& r : lab.runs) {
    const auto sb = sup_bound_check(r.series, r.z_sup, r.slack);
    if (!sb.holds) ++failures, chk.require(false, r.name);
    worst_ratio = std::max(worst_ratio, sb.max_ratio);
    if (sb.equality) equality += (equality.empty() ? "" : ", ") + r.name;
  }
  chk.require(failures == 0, std::to_string(lab.runs.size()) + " runs, max ratio " + g3(worst_ratio));
  if (!equality.empty()) chk.measured.push_back("equality rate in: " + equality);
  return {11, "maximum-principle bound", chk.pass, chk.text(), "max|g'|^2 <= max|g'_0|^2 e^{B0^2 t/2} + slack"};
}

// ---------------------------------------------------------------------------
// 12

void surface_properties(Check& chk) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double skew = 0.0, norm_excess = 0.0, idem = 0.0, tangency = 0.0;
  const SurfaceModel surfaces[] = {SurfaceModel::plane(), SurfaceModel::flat_torus(), SurfaceModel::sphere(),
                                   SurfaceModel::hyperboloid()};
  for (const auto& surface : surfaces) {
    const bool flat = surface.coord_mode() == CoordMode::Intrinsic2D;
    std::vector<MagneticField> fields{MagneticField::constant(1.7), MagneticField::constant(-0.4)};
    if (surface.kind() == SurfaceKind::FlatTorus) fields.push_back(MagneticField::exact_torus(0.8));
    for (int trial = 0; trial < 200; ++trial) {
      Vec3 raw(u(rng), u(rng), flat ? 0.0 : u(rng));
      if (surface.kind() == SurfaceKind::Hyperboloid) raw.x() = 1.5 + std::abs(raw.x()) + raw.tail<2>().norm();
      if (surface.kind() == SurfaceKind::Sphere && raw.norm() < 0.1) raw.x() += 0.5;
      const Vec3 p = retract(surface, raw);
      idem = std::max(idem, (retract(surface, p) - p).norm());
      const Vec3 v = project_tangent(surface, p, Vec3(u(rng), u(rng), flat ? 0.0 : u(rng)));
      const Vec3 w = project_tangent(surface, p, Vec3(u(rng), u(rng), flat ? 0.0 : u(rng)));
      // tangency of the projection: normal component vanishes
      const Vec3 again = project_tangent(surface, p, v);
      tangency = std::max(tangency, (again - v).norm() / (1.0 + v.norm()));
      for (const auto& f : fields) {
        const double a = metric_dot(surface, p, lorentz(f, surface, p, v), w);
        const double b = metric_dot(surface, p, v, lorentz(f, surface, p, w));
        skew = std::max(skew, std::abs(a + b));
        const double zv = std::sqrt(std::max(0.0, metric_dot(surface, p, lorentz(f, surface, p, v), lorentz(f, surface, p, v))));
        const double vv = std::sqrt(std::max(0.0, metric_dot(surface, p, v, v)));
        norm_excess = std::max(norm_excess, zv - f.sup_norm() * vv);
      }
    }
  }
  const bool ok = skew <= 1e-12 && norm_excess <= 1e-12 && idem <= 1e-14 && tangency <= 1e-12;
  chk.require(ok, "surfaces: skew " + g3(skew) + ", |Z|-excess " + g3(norm_excess) + ", retract " + g3(idem));
}

double residual_ratio(const std::function<double(std::size_t)>& residual_at, std::size_t n) {
  return residual_at(n) / residual_at(2 * n);
}

void residual_refinement(Check& chk, Suite suite) {
  const std::vector<std::size_t> levels = suite == Suite::Full ? std::vector<std::size_t>{64, 128, 256}
                                                               : std::vector<std::size_t>{64};
  const double sphere_theta = std::acos(0.5);
  const std::pair<const char*, std::function<double(std::size_t)>> families[] = {
      {"sphere",
       [&](std::size_t n) {
         return geodesic_residual(make_loop(LoopGenerator::sphere_latitude(sphere_theta), n),
                                  MagneticField::constant(0.5));
       }},
      {"hyperbolic",
       [](std::size_t n) {
         return geodesic_residual(make_loop(LoopGenerator::hyperbolic_latitude(std::acosh(2.0)), n),
                                  MagneticField::constant(2.0));
       }},
      {"torus",
       [](std::size_t n) {
         return geodesic_residual(make_loop(LoopGenerator::fourier_mode(1, 0.5, -0.5), n),
                                  MagneticField::constant(1.0));
       }},
  };
  for (const auto& [name, fn] : families) {
    for (auto n : levels) {
      const double r = residual_ratio(fn, n);
      chk.require(r >= 3.5 && r <= 4.5, std::string(name) + " n=" + std::to_string(n) + " factor " + g3(r));
    }
  }
}

void second_variation_values(Check& chk) {
  const std::size_t n = kN;
  // symmetry on a generic loop and direction
  const DiscreteLoop loop = make_loop(LoopGenerator::fourier_mode(1, 1.3, 0.6), n);
  const MagneticField exact = MagneticField::exact_torus(0.7);
  VariationField eta(n), minus(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = loop.parameter(i);
    eta[i] = Vec3(std::sin(2 * s) + 0.3, std::cos(s), 0.0);
    minus[i] = -eta[i];
  }
  const double q = second_variation(loop, exact, eta);
  const double asym = std::abs(q - second_variation(loop, exact, minus));
  chk.require(asym <= 1e-12, "second variation asymmetry " + g3(asym));

  const DiscreteLoop point(SurfaceModel::flat_torus(), std::vector<Vec3>(n, Vec3(1.0, 2.0, 0.0)), kTwoPi);
  VariationField cosine(n), constant(n, Vec3(0.3, -0.2, 0.0));
  for (std::size_t i = 0; i < n; ++i) cosine[i] = Vec3(std::cos(point.parameter(i)), 0.0, 0.0);
  const double v1 = second_variation(point, MagneticField::constant(1.3), cosine);
  const double v2 = second_variation(point, MagneticField::constant(1.3), constant);
  chk.require(std::abs(v1 - kPi) <= 1e-3, "Q(cos) " + g3(v1));
  chk.require(std::abs(v2) <= 1e-12, "Q(const) " + g3(v2));

  const DiscreteLoop great = make_loop(LoopGenerator::sphere_latitude(kPi / 2.0), n);
  const VariationField normal(n, Vec3(0.0, 0.0, 1.0));
  const double v3 = second_variation(great, MagneticField::constant(0.0), normal);
  chk.require(std::abs(v3 + kTwoPi) <= 2e-2, "Q(great circle) " + g3(v3));
}

void determinism_and_resume(Check& chk) {
  const fs::path root = fs::temp_directory_path() / ("mgflow-verify-" + std::to_string(::getpid()));
  fs::remove_all(root);
  ScenarioConfig cfg;
  cfg.surface = SurfaceModel::flat_torus();
  cfg.field = MagneticField::constant(1.0);
  cfg.initial = LoopGenerator::fourier_mode(1, 2.0, 1.0);
  cfg.n = 64;
  cfg.flow.t_max = 2.0;
  cfg.flow.record_stride = 20;
  cfg.output.checkpoint_stride = 1;
  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  const auto a = cmd_run(cfg, root / "a");
  const auto b = cmd_run(cfg, root / "b");
  const std::string da = slurp(root / "a" / "diagnostics.csv");
  chk.require(a.exit_code == 0 && b.exit_code == 0 && !da.empty() && da == slurp(root / "b" / "diagnostics.csv"),
              "repeat run byte-identical");

  RunOptions halt;
  halt.halt_after_records = 7;
  const auto c1 = cmd_run(cfg, root / "c", halt);
  RunOptions resume;
  resume.resume = true;
  const auto c2 = cmd_run(cfg, root / "c", resume);
  std::ifstream sa(root / "a" / "diagnostics.csv"), sc(root / "c" / "diagnostics.csv");
  const auto ra = read_diagnostics_csv(sa);
  const auto rc = read_diagnostics_csv(sc);
  double worst = ra.size() == rc.size() ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < std::min(ra.size(), rc.size()); ++i) {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(x)); };
    worst = std::max({worst, rel(ra[i].time, rc[i].time), rel(ra[i].kinetic, rc[i].kinetic),
                      rel(ra[i].dissipation, rc[i].dissipation), rel(ra[i].flux_term, rc[i].flux_term),
                      rel(ra[i].residual_l2, rc[i].residual_l2)});
  }
  const bool halted = c1.outcome && c1.outcome->halted;
  chk.require(halted && c2.exit_code == 0 && worst <= 1e-12,
              "resume after 7 records: " + std::to_string(rc.size()) + " rows, max rel diff " + g3(worst));
  fs::remove_all(root);
}

CriterionResult property_suites(Suite suite) {
  Check chk;
  surface_properties(chk);
  residual_refinement(chk, suite);
  second_variation_values(chk);
  determinism_and_resume(chk);
  return {12, "property suites", chk.pass, chk.text(),
          "invariants <= 1e-12; factors in [3.5,4.5]; Q values; determinism; resume <= 1e-12"};
}

}  // namespace

Suite suite_from_string(std::string_view name) {
  if (name == "fast") return Suite::Fast;
  if (name == "full") return Suite::Full;
  throw Error("unknown suite '" + std::string(name) + "' (fast or full)");
}

CriterionResult check_torus_threshold(double field_sign) { return torus_threshold(nullptr, field_sign); }

std::string format_result(const CriterionResult& r) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] %2d %-30s", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " | %.1f s", r.seconds);
  return std::string(head) + " | measured: " + r.measured + " | expected: " + r.expected + tail;
}

std::vector<CriterionResult> run_verification(const VerifyOptions& options) {
  Lab lab;
  lab.suite = options.suite;
  std::vector<TrackedMode> tracked;
  auto wanted = [&](int id) {
    return options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end();
  };
  // 3 reuses the tracking runs of 2; 7 and 11 range over everything simulated before them
  const std::vector<std::pair<int, std::function<CriterionResult()>>> plan = {
      {1, [&] { return torus_threshold(&lab, 1.0); }},
      {2, [&] { return closed_form_tracking(lab, tracked); }},
      {3,
       [&] {
         if (tracked.size() < 2) {
           tracked.clear();
           for (double B0 : {0.5, 1.0}) tracked.push_back(track_mode(&lab, B0, 5.0));
         }
         return magnetic_term(lab, tracked);
       }},
      {4, [&] { return drift(lab); }},
      {5, [&] { return sphere_latitudes(lab); }},
      {6, [&] { return hyperbolic_stability(lab); }},
      {8, [&] { return exact_monotonicity(lab); }},
      {9, [&] { return rescaling(lab); }},
      {10, [&] { return decay_bound(lab); }},
      {7, [&] { return energy_identity(lab); }},
      {11, [&] { return sup_bound(lab); }},
      {12, [&] { return property_suites(options.suite); }},
  };
  std::vector<CriterionResult> results;
  for (const auto& [id, fn] : plan) {
    if (!wanted(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {id, "criterion " + std::to_string(id), false, std::string("exception: ") + e.what(), "no exception"};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.progress) *options.progress << format_result(r) << std::endl;
    results.push_back(std::move(r));
  }
  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return results;
}

int cmd_verify(Suite suite, std::ostream& os) {
  VerifyOptions options;
  options.suite = suite;
  options.progress = &os;
  const auto results = run_verification(options);
  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.pass; });
  os << (failed == 0 ? "all " + std::to_string(results.size()) + " criteria passed"
                     : std::to_string(failed) + " of " + std::to_string(results.size()) + " criteria failed")
     << '\n';
  return failed == 0 ? kExitOk : kExitVerify;
}

}  // namespace mgflow
