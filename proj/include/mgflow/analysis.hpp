#pragma once

// Diagnostics of loops and of recorded flow series.

#include "mgflow/flow.hpp"

#include <array>
#include <vector>

namespace mgflow {

/// Per-sample tangent vectors along a loop.
using VariationField = std::vector<Vec3>;

/// sqrt(sum |tau_i - Z(gamma'_i)|^2 h).
double geodesic_residual(const DiscreteLoop& loop, const MagneticField& field);

/// max over records of |kinetic + dissipation + flux_term - E0_kinetic|.
double energy_identity_defect(const std::vector<DiagnosticsRecord>& series, double E0_kinetic);

struct OttarssonResult {
  double lhs = 0.0;  ///< int |gamma'|^2
  double rhs = 0.0;  ///< int |tau|^2
  bool quarter_pi_squared = false;  ///< lhs / (4 pi^2) <= rhs
  bool constant_one = false;        ///< lhs <= rhs (optimal on flat tori)
};

OttarssonResult ottarsson_check(const DiscreteLoop& loop);

/// Small-loop hypothesis of the Poincare-type inequality: energy below
/// r(N)^2/(16 pi) and diameter below r(N). Always true on the plane and the hyperboloid.
bool ottarsson_applicable(const DiscreteLoop& loop);

inline constexpr double kOttarssonGeneral = 1.0 / (4.0 * kPi * kPi);
inline constexpr double kOttarssonFlat = 1.0;

/// Default slack 10 (dt + h^2).
double default_slack(double dt, double h);

struct DecayCheck {
  bool applicable = true;
  bool holds = true;
  double max_violation = 0.0;  ///< largest lhs - bound (negative when comfortably inside)
};

/// int |gamma'_t|^2 <= exp((z_sup^2 - constant) t) int |gamma'_0|^2 + slack at every record.
/// Not applicable (holds stays true) when `initial` fails the small-loop hypothesis.
DecayCheck kinetic_decay_check(const DiscreteLoop& initial, const std::vector<DiagnosticsRecord>& series,
                               double z_sup, double constant, double slack);

/// Sup over samples of |d/dt e - e'' + |tau|^2 - <Z(gamma'), tau>| with e = |gamma'|^2 / 2,
/// centred differences in t (prev, next) and s (cur).
double bochner1_residual(const FlowState& prev, const FlowState& cur, const FlowState& next,
                         const MagneticField& field);

/// Discrete second variation of the energy at `loop` in direction `eta`.
double second_variation(const DiscreteLoop& loop, const MagneticField& field, const VariationField& eta);

struct SupBoundCheck {
  bool holds = true;
  double max_ratio = 0.0;  ///< max over records of max|gamma'_t|^2 / (max|gamma'_0|^2 e^{z^2 t / 2})
  bool equality = false;   ///< late-time growth rate matches the allowed exponent
};

SupBoundCheck sup_bound_check(const std::vector<DiagnosticsRecord>& series, double z_sup, double slack);

struct LimitReport {
  bool trivial = false;
  std::array<int, 2> winding{0, 0};
  double residual = 0.0;
  double speed_variation = 0.0;
  double diameter = 0.0;
};

/// Requires a converged outcome; throws Error otherwise.
LimitReport classify_limit(const FlowOutcome& outcome, const MagneticField& field, double tol_point = 1e-3);

}  // namespace mgflow
