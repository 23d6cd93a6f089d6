#pragma once

// Explicit RK4 integration of the magnetic heat flow
//
//   dot gamma = tau(gamma) - Z(gamma')
//
// with retraction onto the surface after every step and running quadrature of
// the two time integrals in the energy identity.

#include "mgflow/diagnostics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mgflow {

struct FlowState {
  DiscreteLoop loop;
  double time = 0.0;
  double dissipation = 0.0;
  double flux_term = 0.0;
  std::uint64_t steps = 0;

  explicit FlowState(DiscreteLoop l) : loop(std::move(l)) {}
};

/// Thrown by step() when a retraction fails or the state becomes non-finite.
class NumericalBlowupError : public Error {
 public:
  NumericalBlowupError(const std::string& what, FlowState last_valid)
      : Error(what), last_valid_(std::move(last_valid)) {}
  const FlowState& last_valid() const { return last_valid_; }

 private:
  FlowState last_valid_;
};

enum class DtPolicy { FixedCFL, Explicit };

struct FlowConfig {
  DtPolicy dt_policy = DtPolicy::FixedCFL;
  double safety = 0.9;  ///< FixedCFL
  double dt = 0.0;      ///< Explicit
  double t_max = 50.0;
  double tol_residual = 1e-3;
  double tol_point = 1e-3;
  double divergence_threshold = 1e6;
  std::uint64_t record_stride = 100;

  /// Throws Error listing every violated constraint.
  void validate() const;
  bool operator==(const FlowConfig&) const = default;
};

enum class Classification { ConvergedNontrivial, ConvergedPoint, Diverged, Timeout };

std::string_view to_string(Classification c);
Classification classification_from_string(std::string_view name);

struct FlowOutcome {
  Classification classification = Classification::Timeout;
  FlowState final;
  std::vector<DiagnosticsRecord> series;
  bool blowup = false;  ///< Diverged because of a numerical failure, not the threshold
  bool halted = false;  ///< stopped early by RunHooks::halt
  std::string note;
};

/// Parabolic step bound safety * h^2 / 4.
double stable_dt(const DiscreteLoop& loop, double safety = 1.0);
/// Time step the config selects for this loop.
double select_dt(const DiscreteLoop& loop, const FlowConfig& config);

/// Right-hand side tau - Z(gamma') at every sample (the pointwise geodesic residual).
std::vector<Vec3> flow_velocity(const DiscreteLoop& loop, const MagneticField& field);

FlowState step(const FlowState& state, const MagneticField& field, double dt);

/// Steps with a fixed dt until `t_end` (last step shortened), calling `observer`
/// after every step.
FlowState advance(FlowState state, const MagneticField& field, double t_end, double dt,
                  const std::function<void(const FlowState&)>& observer = {});

struct RunHooks {
  /// Called for every emitted diagnostics record.
  std::function<void(const FlowState&, const DiagnosticsRecord&)> on_record;
  /// Polled after each record; returning true stops the run (outcome.halted).
  std::function<bool()> halt;
  /// Suppress the record at the starting state (used when resuming).
  bool skip_initial_record = false;
};

FlowOutcome run(const DiscreteLoop& initial, const MagneticField& field, const FlowConfig& config);
FlowOutcome run(FlowState start, const MagneticField& field, const FlowConfig& config, const RunHooks& hooks);

/// Loop re-indexed onto a circle of length circle_length / lambda, field scaled by lambda.
std::pair<DiscreteLoop, MagneticField> rescale(const DiscreteLoop& loop, const MagneticField& field, double lambda);

}  // namespace mgflow
