#include "mgflow/surfaces.hpp"

#include <algorithm>
#include <cmath>

namespace mgflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double minkowski(const Vec3& u, const Vec3& v) { return u.x() * v.x() - u.y() * v.y() - u.z() * v.z(); }

// std::round is an out-of-line libm call without SSE4.1 and sits on the hot path here.
double nearest_integer(double x) {
  if (!(std::abs(x) < 1e15)) return std::round(x);
  const double t = static_cast<double>(static_cast<long long>(x));
  const double r = x - t;
  return r >= 0.5 ? t + 1.0 : (r <= -0.5 ? t - 1.0 : t);
}

bool is_intrinsic(SurfaceKind kind) { return kind == SurfaceKind::Plane || kind == SurfaceKind::FlatTorus; }

double wrap_coordinate(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

}  // namespace

std::string_view to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::Plane: return "Plane";
    case SurfaceKind::FlatTorus: return "FlatTorus";
    case SurfaceKind::Sphere: return "Sphere";
    case SurfaceKind::Hyperboloid: return "Hyperboloid";
  }
  return "?";
}

SurfaceKind surface_kind_from_string(std::string_view name) {
  for (auto kind : {SurfaceKind::Plane, SurfaceKind::FlatTorus, SurfaceKind::Sphere, SurfaceKind::Hyperboloid}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error("unknown surface kind '" + std::string(name) + "'");
}

std::string_view to_string(FieldKind kind) {
  return kind == FieldKind::ConstantStrength ? "ConstantStrength" : "ExactPotential";
}

FieldKind field_kind_from_string(std::string_view name) {
  if (name == "ConstantStrength") return FieldKind::ConstantStrength;
  if (name == "ExactPotential") return FieldKind::ExactPotential;
  throw Error("unknown field kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// SurfaceModel

SurfaceModel SurfaceModel::plane() { return {SurfaceKind::Plane, {0.0, 0.0}}; }

SurfaceModel SurfaceModel::flat_torus(double period_phi, double period_z) {
  if (!(period_phi > 0.0) || !(period_z > 0.0) || !std::isfinite(period_phi) || !std::isfinite(period_z)) {
    throw Error("torus periods must be positive and finite");
  }
  return {SurfaceKind::FlatTorus, {period_phi, period_z}};
}

SurfaceModel SurfaceModel::sphere() { return {SurfaceKind::Sphere, {0.0, 0.0}}; }

SurfaceModel SurfaceModel::hyperboloid() { return {SurfaceKind::Hyperboloid, {0.0, 0.0}}; }

CoordMode SurfaceModel::coord_mode() const {
  return is_intrinsic(kind_) ? CoordMode::Intrinsic2D : CoordMode::Ambient3D;
}

double SurfaceModel::curvature() const {
  switch (kind_) {
    case SurfaceKind::Sphere: return 1.0;
    case SurfaceKind::Hyperboloid: return -1.0;
    default: return 0.0;
  }
}

bool SurfaceModel::is_compact() const { return kind_ == SurfaceKind::FlatTorus || kind_ == SurfaceKind::Sphere; }

double SurfaceModel::injectivity_radius() const {
  switch (kind_) {
    case SurfaceKind::FlatTorus: return 0.5 * std::min(periods_[0], periods_[1]);
    case SurfaceKind::Sphere: return kPi;
    default: return kInf;
  }
}

double SurfaceModel::constraint_defect(const Vec3& p) const {
  switch (kind_) {
    case SurfaceKind::Sphere: return p.squaredNorm() - 1.0;
    case SurfaceKind::Hyperboloid: {
      double q = minkowski(p, p) - 1.0;
      // The lower sheet satisfies the quadric too; report it as maximally off.
      return p.x() >= 1.0 - kSurfaceTolerance ? q : kInf;
    }
    default: return p.z();
  }
}

bool SurfaceModel::contains(const Vec3& p, double tol) const {
  return p.allFinite() && std::abs(constraint_defect(p)) <= tol;
}

void SurfaceModel::require_on_surface(const Vec3& p) const {
  if (!contains(p)) {
    throw InvalidPointError("point off " + std::string(to_string(kind_)) + " (defect " +
                            std::to_string(constraint_defect(p)) + ")");
  }
}

Vec3 SurfaceModel::displacement(const Vec3& from, const Vec3& to) const {
  Vec3 d = to - from;
  if (kind_ == SurfaceKind::FlatTorus) {
    d.x() -= periods_[0] * nearest_integer(d.x() / periods_[0]);
    d.y() -= periods_[1] * nearest_integer(d.y() / periods_[1]);
  }
  return d;
}

Vec3 SurfaceModel::wrap(const Vec3& p) const {
  if (kind_ != SurfaceKind::FlatTorus) return p;
  return {wrap_coordinate(p.x(), periods_[0]), wrap_coordinate(p.y(), periods_[1]), 0.0};
}

// ---------------------------------------------------------------------------
// MagneticField

MagneticField MagneticField::constant(double B0) {
  if (!std::isfinite(B0)) throw Error("field strength must be finite");
  return {FieldKind::ConstantStrength, B0};
}

MagneticField MagneticField::exact_torus(double epsilon) {
  if (!std::isfinite(epsilon)) throw Error("potential amplitude must be finite");
  return {FieldKind::ExactPotential, epsilon};
}

double MagneticField::sup_norm() const { return std::abs(strength_); }

MagneticField MagneticField::scaled(double lambda) const { return {kind_, lambda * strength_}; }

void MagneticField::require_compatible(const SurfaceModel& surface) const {
  if (kind_ == FieldKind::ExactPotential && surface.kind() != SurfaceKind::FlatTorus) {
    throw Error("exact potential only on FlatTorus");
  }
}

// ---------------------------------------------------------------------------
// Pointwise geometry

namespace detail {

Vec3 project_tangent_unchecked(SurfaceKind kind, const Vec3& p, const Vec3& v) {
  switch (kind) {
    case SurfaceKind::Sphere: return v - (p.dot(v) / p.squaredNorm()) * p;
    case SurfaceKind::Hyperboloid: return v - (minkowski(p, v) / minkowski(p, p)) * p;
    default: return {v.x(), v.y(), 0.0};
  }
}

Vec3 lorentz_unchecked(const MagneticField& field, SurfaceKind kind, const Vec3& p, const Vec3& v) {
  const double B0 = field.strength();
  switch (kind) {
    case SurfaceKind::Sphere: return B0 * p.cross(v);
    case SurfaceKind::Hyperboloid:
      return B0 * Vec3(p.z() * v.y() - p.y() * v.z(), p.z() * v.x() - p.x() * v.z(), p.x() * v.y() - p.y() * v.x());
    default: {
      // Z(v) = b (v_z, -v_phi); Omega = b dphi ^ dz.
      const double b = field.kind() == FieldKind::ConstantStrength ? B0 : -B0 * std::cos(p.y());
      return {b * v.y(), -b * v.x(), 0.0};
    }
  }
}

bool try_retract(SurfaceKind kind, const Vec3& p_raw, Vec3& out) {
  if (!p_raw.allFinite()) return false;
  switch (kind) {
    case SurfaceKind::Sphere: {
      double r = p_raw.norm();
      if (!(r > 0.0)) return false;
      out = p_raw / r;
      return true;
    }
    case SurfaceKind::Hyperboloid: {
      double q = minkowski(p_raw, p_raw);
      if (!(q > 0.0) || !(p_raw.x() > 0.0)) return false;
      out = p_raw / std::sqrt(q);
      return true;
    }
    default:
      out = Vec3(p_raw.x(), p_raw.y(), 0.0);
      return true;
  }
}

}  // namespace detail

Vec3 project_tangent(const SurfaceModel& surface, const Vec3& p, const Vec3& v) {
  surface.require_on_surface(p);
  return detail::project_tangent_unchecked(surface.kind(), p, v);
}

Vec3 tension_correction(const SurfaceModel& surface, const Vec3& p, const Vec3& v) {
  surface.require_on_surface(p);
  switch (surface.kind()) {
    case SurfaceKind::Sphere: return v.squaredNorm() * p;
    case SurfaceKind::Hyperboloid: return minkowski(v, v) * p;
    default: return Vec3::Zero();
  }
}

Vec3 lorentz(const MagneticField& field, const SurfaceModel& surface, const Vec3& p, const Vec3& v) {
  field.require_compatible(surface);
  surface.require_on_surface(p);
  return detail::lorentz_unchecked(field, surface.kind(), p, v);
}

Vec3 retract(const SurfaceModel& surface, const Vec3& p_raw) {
  Vec3 out;
  if (!detail::try_retract(surface.kind(), p_raw, out)) {
    throw RetractionError("retraction undefined on " + std::string(to_string(surface.kind())));
  }
  return out;
}

double metric_dot(const SurfaceModel& surface, const Vec3& p, const Vec3& v, const Vec3& w) {
  (void)p;
  return detail::metric_dot(surface.kind(), v, w);
}

PotentialValue potential_eval(const MagneticField& field, const SurfaceModel& surface, const Vec3& p) {
  field.require_compatible(surface);
  const double s = field.strength();
  if (field.kind() == FieldKind::ExactPotential) {
    return {true, Vec3(s * std::sin(p.y()), 0.0, 0.0)};
  }
  switch (surface.kind()) {
    case SurfaceKind::Plane: return {true, Vec3(0.0, s * p.x(), 0.0)};
    case SurfaceKind::Hyperboloid: {
      // A = -B0 (p2 dp3 - p3 dp2) / (p1 + 1), smooth on the whole upper sheet.
      const double c = s / (p.x() + 1.0);
      return {true, Vec3(0.0, c * p.z(), -c * p.y())};
    }
    default: return {};  // nonzero total flux on a compact surface
  }
}

SmallEnergyThreshold small_energy_threshold(const SurfaceModel& surface) {
  if (!surface.is_compact()) return {kInf, kInf, false};
  double r = surface.injectivity_radius();
  const double kappa = surface.curvature();
  if (kappa > 0.0) r = std::min(r, 1.0 / (2.0 * std::sqrt(kappa)));
  return {r, r * r / (16.0 * kPi), true};
}

}  // namespace mgflow
