#pragma once

#include "mgflow/loops.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace mgflow {

/// One row of the diagnostics time series.
struct DiagnosticsRecord {
  double time = 0.0;
  double kinetic = 0.0;
  std::optional<double> magnetic;
  double dissipation = 0.0;   ///< int_0^t int |dot gamma|^2
  double flux_term = 0.0;     ///< int_0^t int Omega(dot gamma, gamma')
  double residual_l2 = 0.0;   ///< || tau - Z(gamma') ||_{L^2}
  double speed_min = 0.0;
  double speed_max = 0.0;
  double diameter = 0.0;
  double ottarsson_lhs = 0.0; ///< int |gamma'|^2
  double ottarsson_rhs = 0.0; ///< int |tau|^2

  bool operator==(const DiagnosticsRecord&) const = default;
};

DiagnosticsRecord make_record(const DiscreteLoop& loop, const MagneticField& field, double time, double dissipation,
                              double flux_term);

inline constexpr const char* kDiagnosticsHeader =
    "time,kinetic,magnetic,dissipation,flux_term,residual_l2,speed_min,speed_max,diameter,ottarsson_lhs,ottarsson_rhs";

/// Writes one CSV row (no trailing header); 17 significant digits, "NA" for absent magnetic energy.
void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& rec);
void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series);
std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is);

}  // namespace mgflow
