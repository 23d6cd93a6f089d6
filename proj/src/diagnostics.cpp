#include "mgflow/diagnostics.hpp"

#include "mgflow/analysis.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mgflow {

DiagnosticsRecord make_record(const DiscreteLoop& loop, const MagneticField& field, double time, double dissipation,
                              double flux_term) {
  DiagnosticsRecord rec;
  rec.time = time;
  rec.kinetic = kinetic_energy(loop);
  rec.magnetic = magnetic_energy(loop, field);
  rec.dissipation = dissipation;
  rec.flux_term = flux_term;
  rec.residual_l2 = geodesic_residual(loop, field);
  std::tie(rec.speed_min, rec.speed_max) = speed_stats(loop);
  rec.diameter = diameter(loop);
  const auto ott = ottarsson_check(loop);
  rec.ottarsson_lhs = ott.lhs;
  rec.ottarsson_rhs = ott.rhs;
  return rec;
}

namespace {

void put(std::ostream& os, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

double parse_double(const std::string& field, std::size_t line) {
  double x = 0.0;
  const char* first = field.data();
  const char* last = first + field.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) {
    // from_chars rejects "inf"/"nan" spellings produced by printf on some platforms
    try {
      std::size_t used = 0;
      x = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw Error("diagnostics CSV line " + std::to_string(line) + ": bad number '" + field + "'");
    }
  }
  return x;
}

}  // namespace

void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& rec) {
  put(os, rec.time);
  os << ',';
  put(os, rec.kinetic);
  os << ',';
  if (rec.magnetic) {
    put(os, *rec.magnetic);
  } else {
    os << "NA";
  }
  for (double x : {rec.dissipation, rec.flux_term, rec.residual_l2, rec.speed_min, rec.speed_max, rec.diameter,
                   rec.ottarsson_lhs, rec.ottarsson_rhs}) {
    os << ',';
    put(os, x);
  }
  os << '\n';
}

void write_diagnostics_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& series) {
  os << kDiagnosticsHeader << '\n';
  for (const auto& rec : series) write_diagnostics_row(os, rec);
}

std::vector<DiagnosticsRecord> read_diagnostics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kDiagnosticsHeader) throw Error("diagnostics CSV: missing or wrong header");
  std::vector<DiagnosticsRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 11) throw Error("diagnostics CSV line " + std::to_string(lineno) + ": expected 11 fields");
    DiagnosticsRecord rec;
    rec.time = parse_double(fields[0], lineno);
    rec.kinetic = parse_double(fields[1], lineno);
    if (fields[2] != "NA") rec.magnetic = parse_double(fields[2], lineno);
    rec.dissipation = parse_double(fields[3], lineno);
    rec.flux_term = parse_double(fields[4], lineno);
    rec.residual_l2 = parse_double(fields[5], lineno);
    rec.speed_min = parse_double(fields[6], lineno);
    rec.speed_max = parse_double(fields[7], lineno);
    rec.diameter = parse_double(fields[8], lineno);
    rec.ottarsson_lhs = parse_double(fields[9], lineno);
    rec.ottarsson_rhs = parse_double(fields[10], lineno);
    out.push_back(rec);
  }
  return out;
}

}  // namespace mgflow
