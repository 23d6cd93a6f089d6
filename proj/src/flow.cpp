#include "mgflow/flow.hpp"

#include "mgflow/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace mgflow {

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::ConvergedNontrivial: return "ConvergedNontrivial";
    case Classification::ConvergedPoint: return "ConvergedPoint";
    case Classification::Diverged: return "Diverged";
    case Classification::Timeout: return "Timeout";
  }
  return "?";
}

Classification classification_from_string(std::string_view name) {
  for (auto c : {Classification::ConvergedNontrivial, Classification::ConvergedPoint, Classification::Diverged,
                 Classification::Timeout}) {
    if (to_string(c) == name) return c;
  }
  throw Error("unknown classification '" + std::string(name) + "'");
}

void FlowConfig::validate() const {
  std::string problems;
  auto flag = [&](bool bad, const char* what) {
    if (bad) problems += std::string(problems.empty() ? "" : "; ") + what;
  };
  if (dt_policy == DtPolicy::FixedCFL) flag(!(safety > 0.0 && safety <= 1.0), "safety must lie in (0, 1]");
  if (dt_policy == DtPolicy::Explicit) flag(!(dt > 0.0) || !std::isfinite(dt), "dt must be positive");
  flag(!(t_max > 0.0) || !std::isfinite(t_max), "t_max must be positive and finite");
  flag(!(tol_residual > 0.0), "tol_residual must be positive");
  flag(!(tol_point > 0.0), "tol_point must be positive");
  flag(!(divergence_threshold > 0.0), "divergence_threshold must be positive");
  flag(record_stride == 0, "record_stride must be at least 1");
  if (!problems.empty()) throw Error("invalid flow config: " + problems);
}

double stable_dt(const DiscreteLoop& loop, double safety) {
  const double h = loop.spacing();
  return safety * h * h / 4.0;
}

double select_dt(const DiscreteLoop& loop, const FlowConfig& config) {
  return config.dt_policy == DtPolicy::FixedCFL ? stable_dt(loop, config.safety) : config.dt;
}

namespace {

// Scratch buffers and the right-hand side evaluation shared by all stages.
class Integrator {
 public:
  Integrator(const DiscreteLoop& loop, const MagneticField& field)
      : Integrator(loop.surface(), field, loop.size(), loop.spacing(), loop.closure()) {}

  Integrator(const SurfaceModel& surface, const MagneticField& field, std::size_t n, double h, const Vec3& closure)
      : surface_(surface), field_(field), kind_(surface.kind()), h_(h), closure_(closure),
        pts_(n), vel_(n), tau_(n), stage_(n), k_{std::vector<Vec3>(n), std::vector<Vec3>(n), std::vector<Vec3>(n),
                                                     std::vector<Vec3>(n)},
        z_{std::vector<Vec3>(n), std::vector<Vec3>(n), std::vector<Vec3>(n), std::vector<Vec3>(n)} {}

  // tau - Z(gamma') at the retraction of `raw`; false if the retraction fails.
  bool rhs(std::span<const Vec3> raw, std::vector<Vec3>& k, std::vector<Vec3>& z) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!detail::try_retract(kind_, raw[i], pts_[i])) return false;
    }
    detail::velocities_and_tensions(kind_, pts_, closure_, h_, vel_, tau_);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      z[i] = detail::lorentz_unchecked(field_, kind_, pts_[i], vel_[i]);
      k[i] = tau_[i] - z[i];
    }
    return true;
  }

  struct Status {
    bool finite = true;
    double residual = 0.0;     // L2 norm of the right-hand side
    double speed_l2 = 0.0;     // L2 norm of gamma'
    double max_speed_sq = 0.0;
  };

  // Evaluates stage one at `state` and keeps it for the next call to advance().
  Status assess(const FlowState& state) {
    Status st;
    const auto pts = state.loop.samples();
    if (!rhs(pts, k_[0], z_[0])) {
      st.finite = false;
      cached_ = false;
      return st;
    }
    double r = 0.0, s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      r += detail::metric_dot(kind_, k_[0][i], k_[0][i]);
      const double vv = detail::metric_dot(kind_, vel_[i], vel_[i]);
      s += vv;
      st.max_speed_sq = std::max(st.max_speed_sq, vv);
    }
    st.residual = std::sqrt(std::max(0.0, r * h_));
    st.speed_l2 = std::sqrt(std::max(0.0, s * h_));
    st.finite = std::isfinite(st.residual) && std::isfinite(st.speed_l2);
    cached_ = st.finite;
    return st;
  }

  FlowState advance(const FlowState& state, double dt) {
    const auto y0 = state.loop.samples();
    const std::size_t n = y0.size();
    auto fail = [&](const char* what) { return NumericalBlowupError(what, state); };

    if (!cached_ && !rhs(y0, k_[0], z_[0])) throw fail("retraction failed at stage 1");
    cached_ = false;
    const double c[3] = {0.5 * dt, 0.5 * dt, dt};
    for (int s = 0; s < 3; ++s) {
      for (std::size_t i = 0; i < n; ++i) stage_[i] = y0[i] + c[s] * k_[s][i];
      if (!rhs(stage_, k_[s + 1], z_[s + 1])) throw fail("retraction failed at an intermediate stage");
    }

    std::vector<Vec3> next(n);
    double diss = 0.0, flux = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 g = (k_[0][i] + 2.0 * k_[1][i] + 2.0 * k_[2][i] + k_[3][i]) / 6.0;
      const Vec3 zb = (z_[0][i] + 2.0 * z_[1][i] + 2.0 * z_[2][i] + z_[3][i]) / 6.0;
      if (!detail::try_retract(kind_, y0[i] + dt * g, next[i])) throw fail("retraction failed after the step");
      diss += detail::metric_dot(kind_, g, g);
      flux += detail::metric_dot(kind_, g, zb);
    }

    FlowState out = [&] {
      try {
        return FlowState(DiscreteLoop(surface_, std::move(next), state.loop.circle_length(), closure_));
      } catch (const InvalidPointError&) {
        throw fail("retracted state left the surface tolerance");
      }
    }();
    out.time = state.time + dt;
    out.dissipation = state.dissipation + dt * diss * h_;
    out.flux_term = state.flux_term + dt * flux * h_;
    out.steps = state.steps + 1;
    if (!std::isfinite(out.dissipation) || !std::isfinite(out.flux_term)) throw fail("non-finite energy accumulators");
    return out;
  }

 private:
  SurfaceModel surface_;
  MagneticField field_;
  SurfaceKind kind_;
  double h_;
  Vec3 closure_;
  std::vector<Vec3> pts_, vel_, tau_, stage_;
  std::vector<Vec3> k_[4];
  std::vector<Vec3> z_[4];
  bool cached_ = false;
};

void check_dt(const DiscreteLoop& loop, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("time step must be positive and finite");
  if (dt > stable_dt(loop) * 1.0001) {
    throw Error("time step " + std::to_string(dt) + " exceeds the parabolic bound " + std::to_string(stable_dt(loop)));
  }
}

// Cheap diameter test first; the exact O(n^2) diameter only near the threshold.
bool is_point(const DiscreteLoop& loop, double tol) {
  const auto& surface = loop.surface();
  const auto pts = loop.samples();
  double r = 0.0;
  for (const auto& p : pts) r = std::max(r, surface.displacement(pts[0], p).norm());
  if (2.0 * r <= tol) return true;
  if (r > tol) return false;
  return diameter(loop) <= tol;
}

}  // namespace

std::vector<Vec3> flow_velocity(const DiscreteLoop& loop, const MagneticField& field) {
  field.require_compatible(loop.surface());
  std::vector<Vec3> k(loop.size()), z(loop.size());
  Integrator integ(loop, field);
  integ.rhs(loop.samples(), k, z);
  return k;
}

FlowState step(const FlowState& state, const MagneticField& field, double dt) {
  field.require_compatible(state.loop.surface());
  check_dt(state.loop, dt);
  Integrator integ(state.loop, field);
  return integ.advance(state, dt);
}

FlowState advance(FlowState state, const MagneticField& field, double t_end, double dt,
                  const std::function<void(const FlowState&)>& observer) {
  field.require_compatible(state.loop.surface());
  check_dt(state.loop, dt);
  Integrator integ(state.loop, field);
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
  while (state.time < t_end - eps) {
    const double h = std::min(dt, t_end - state.time);
    state = integ.advance(state, h);
    if (observer) observer(state);
  }
  return state;
}

FlowOutcome run(const DiscreteLoop& initial, const MagneticField& field, const FlowConfig& config) {
  return run(FlowState(initial), field, config, RunHooks{});
}

FlowOutcome run(FlowState start, const MagneticField& field, const FlowConfig& config, const RunHooks& hooks) {
  config.validate();
  field.require_compatible(start.loop.surface());
  const double dt = select_dt(start.loop, config);
  check_dt(start.loop, dt);

  Integrator integ(start.loop, field);
  FlowOutcome out{.classification = Classification::Timeout, .final = start, .series = {}, .blowup = false, .halted = false, .note = {}};
  FlowState state = std::move(start);
  const std::uint64_t first_step = state.steps;
  const double t_eps = 1e-12 * std::max(1.0, config.t_max);

  auto emit = [&](const FlowState& s) {
    const auto rec = make_record(s.loop, field, s.time, s.dissipation, s.flux_term);
    out.series.push_back(rec);
    if (hooks.on_record) hooks.on_record(s, rec);
  };

  for (;;) {
    const auto st = integ.assess(state);
    const bool on_stride = state.steps % config.record_stride == 0;
    const bool skip = hooks.skip_initial_record && state.steps == first_step;
    bool emitted = false;
    auto emit_once = [&] {
      if (!emitted && !(skip && on_stride)) emit(state);
      emitted = true;
    };

    if (!st.finite) {
      out.classification = Classification::Diverged;
      out.blowup = true;
      out.note = "non-finite state";
      break;
    }
    if (on_stride) emit_once();

    if (st.max_speed_sq >= config.divergence_threshold) {
      out.classification = Classification::Diverged;
    } else if (is_point(state.loop, config.tol_point)) {
      out.classification = Classification::ConvergedPoint;
    } else if (st.residual <= config.tol_residual * std::min(1.0, st.speed_l2)) {
      out.classification = Classification::ConvergedNontrivial;
    } else if (state.time >= config.t_max - t_eps) {
      out.classification = Classification::Timeout;
      const auto w = winding(state.loop);
      if (w[0] != 0 || w[1] != 0) {
        out.note = "winding (" + std::to_string(w[0]) + "," + std::to_string(w[1]) +
                   ") loop still moving; residual " + std::to_string(st.residual);
      }
    } else {
      if (emitted && hooks.halt && hooks.halt()) {
        out.halted = true;
        break;
      }
      try {
        state = integ.advance(state, dt);
      } catch (const NumericalBlowupError& e) {
        out.classification = Classification::Diverged;
        out.blowup = true;
        out.note = e.what();
        break;
      }
      continue;
    }
    emit_once();
    break;
  }
  out.final = std::move(state);
  return out;
}

std::pair<DiscreteLoop, MagneticField> rescale(const DiscreteLoop& loop, const MagneticField& field, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error("rescaling factor must be positive");
  std::vector<Vec3> samples(loop.samples().begin(), loop.samples().end());
  return {DiscreteLoop(loop.surface(), std::move(samples), loop.circle_length() / lambda, loop.closure()),
          field.scaled(lambda)};
}

}  // namespace mgflow
