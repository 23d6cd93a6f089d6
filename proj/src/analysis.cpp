#include "mgflow/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace mgflow {

namespace {

double norm2(SurfaceKind kind, const Vec3& v) { return detail::metric_dot(kind, v, v); }

}  // namespace

double geodesic_residual(const DiscreteLoop& loop, const MagneticField& field) {
  const auto r = flow_velocity(loop, field);
  const SurfaceKind kind = loop.surface().kind();
  double sum = 0.0;
  for (const auto& v : r) sum += norm2(kind, v);
  return std::sqrt(std::max(0.0, sum * loop.spacing()));
}

double energy_identity_defect(const std::vector<DiagnosticsRecord>& series, double E0_kinetic) {
  double worst = 0.0;
  for (const auto& rec : series) {
    worst = std::max(worst, std::abs(rec.kinetic + rec.dissipation + rec.flux_term - E0_kinetic));
  }
  return worst;
}

OttarssonResult ottarsson_check(const DiscreteLoop& loop) {
  const SurfaceKind kind = loop.surface().kind();
  const auto vel = velocity(loop);
  const auto tau = tension(loop);
  OttarssonResult out;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    out.lhs += norm2(kind, vel[i]);
    out.rhs += norm2(kind, tau[i]);
  }
  out.lhs *= loop.spacing();
  out.rhs *= loop.spacing();
  // relative round-off allowance so that exact equality is not reported as a failure
  const double eps = 1e-12 * std::max(out.lhs, out.rhs);
  out.quarter_pi_squared = kOttarssonGeneral * out.lhs <= out.rhs + eps;
  out.constant_one = out.lhs <= out.rhs + eps;
  return out;
}

bool ottarsson_applicable(const DiscreteLoop& loop) {
  const auto threshold = small_energy_threshold(loop.surface());
  if (!threshold.compact) return true;
  return kinetic_energy(loop) < threshold.threshold && diameter(loop) < threshold.radius;
}

double default_slack(double dt, double h) { return 10.0 * (dt + h * h); }

DecayCheck kinetic_decay_check(const DiscreteLoop& initial, const std::vector<DiagnosticsRecord>& series,
                               double z_sup, double constant, double slack) {
  DecayCheck out;
  out.applicable = ottarsson_applicable(initial);
  if (!out.applicable || series.empty()) return out;
  const double t0 = series.front().time;
  const double e0 = series.front().kinetic;
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& rec : series) {
    const double bound = std::exp((z_sup * z_sup - constant) * (rec.time - t0)) * e0;
    const double excess = rec.kinetic - bound;
    out.max_violation = std::max(out.max_violation, excess);
    if (!(excess <= slack)) out.holds = false;
  }
  return out;
}

double bochner1_residual(const FlowState& prev, const FlowState& cur, const FlowState& next,
                         const MagneticField& field) {
  const auto& loop = cur.loop;
  const std::size_t n = loop.size();
  if (prev.loop.size() != n || next.loop.size() != n) throw Error("bochner1_residual: sample counts differ");
  const double span = next.time - prev.time;
  if (!(span > 0.0)) throw Error("bochner1_residual: states must be ordered in time");

  const SurfaceKind kind = loop.surface().kind();
  auto half_speed_sq = [&](const DiscreteLoop& l) {
    const auto v = velocity(l);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = 0.5 * norm2(kind, v[i]);
    return e;
  };
  const auto ep = half_speed_sq(prev.loop);
  const auto ec = half_speed_sq(cur.loop);
  const auto en = half_speed_sq(next.loop);
  const auto vel = velocity(loop);
  const auto tau = tension(loop);
  const double h = loop.spacing();

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt_e = (en[i] - ep[i]) / span;
    const double lap_e = (ec[(i + 1) % n] - 2.0 * ec[i] + ec[(i + n - 1) % n]) / (h * h);
    const Vec3 z = detail::lorentz_unchecked(field, kind, loop.samples()[i], vel[i]);
    const double r = dt_e - lap_e + norm2(kind, tau[i]) - detail::metric_dot(kind, z, tau[i]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

double second_variation(const DiscreteLoop& loop, const MagneticField& field, const VariationField& eta) {
  const std::size_t n = loop.size();
  if (eta.size() != n) throw Error("second_variation: variation field has the wrong length");
  const auto& surface = loop.surface();
  const SurfaceKind kind = surface.kind();
  const double K = surface.curvature();
  const double h = loop.spacing();
  const auto pts = loop.samples();
  const auto vel = velocity(loop);

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = pts[i];
    const Vec3& e = eta[i];
    const Vec3& v = vel[i];
    const Vec3 grad = detail::project_tangent_unchecked(kind, p, (eta[(i + 1) % n] - eta[(i + n - 1) % n]) / (2.0 * h));

    const double ee = norm2(kind, e);
    const double ev = detail::metric_dot(kind, e, v);
    const double curvature_term = K * (ee * norm2(kind, v) - ev * ev);

    // (nabla_eta Z)(gamma') by a central difference along the retracted displacement
    double dz_term = 0.0;
    if (ee != 0.0) {
      const double delta = 1e-5 * (1.0 + p.norm());
      const Vec3 plus = retract(surface, p + delta * e);
      const Vec3 minus = retract(surface, p - delta * e);
      const Vec3 zp = detail::lorentz_unchecked(field, kind, plus, detail::project_tangent_unchecked(kind, plus, v));
      const Vec3 zm = detail::lorentz_unchecked(field, kind, minus, detail::project_tangent_unchecked(kind, minus, v));
      const Vec3 dz = detail::project_tangent_unchecked(kind, p, (zp - zm) / (2.0 * delta));
      dz_term = detail::metric_dot(kind, dz, e);
    }

    const double zgrad_term = detail::metric_dot(kind, detail::lorentz_unchecked(field, kind, p, grad), e);
    sum += norm2(kind, grad) - curvature_term + dz_term + zgrad_term;
  }
  return sum * h;
}

SupBoundCheck sup_bound_check(const std::vector<DiagnosticsRecord>& series, double z_sup, double slack) {
  SupBoundCheck out;
  if (series.empty()) return out;
  const double t0 = series.front().time;
  const double s0 = series.front().speed_max * series.front().speed_max;
  const double rate = 0.5 * z_sup * z_sup;
  for (const auto& rec : series) {
    const double allowed = s0 * std::exp(rate * (rec.time - t0));
    const double measured = rec.speed_max * rec.speed_max;
    if (!(measured <= allowed + slack)) out.holds = false;
    if (allowed > 0.0) out.max_ratio = std::max(out.max_ratio, measured / allowed);
  }
  if (rate > 0.0 && series.size() >= 4) {
    const auto& mid = series[series.size() / 2];
    const auto& last = series.back();
    const double sm = mid.speed_max * mid.speed_max;
    const double sl = last.speed_max * last.speed_max;
    if (sm > 0.0 && sl > 0.0 && last.time > mid.time) {
      const double growth = std::log(sl / sm) / (last.time - mid.time);
      out.equality = std::abs(growth - rate) <= 0.05 * rate;
    }
  }
  return out;
}

LimitReport classify_limit(const FlowOutcome& outcome, const MagneticField& field, double tol_point) {
  if (outcome.classification != Classification::ConvergedNontrivial &&
      outcome.classification != Classification::ConvergedPoint) {
    throw Error("classify_limit needs a converged outcome, got " + std::string(to_string(outcome.classification)));
  }
  const auto& loop = outcome.final.loop;
  LimitReport out;
  out.diameter = diameter(loop);
  out.trivial = out.diameter <= tol_point;
  out.winding = winding(loop);
  out.residual = geodesic_residual(loop, field);
  const auto [lo, hi] = speed_stats(loop);
  out.speed_variation = hi - lo;
  return out;
}

}  // namespace mgflow
