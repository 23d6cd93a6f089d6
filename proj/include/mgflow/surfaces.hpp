#pragma once

// Model target surfaces and the magnetic fields living on them.
//
// Every point and vector is stored as an Eigen::Vector3d. Plane and FlatTorus
// use intrinsic coordinates (phi, z) in the first two components with the third
// component held at zero; Sphere and Hyperboloid use ambient coordinates in R^3.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mgflow {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Absolute tolerance for on-surface checks.
inline constexpr double kSurfaceTolerance = 1e-9;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidPointError : public Error {
 public:
  using Error::Error;
};

class RetractionError : public Error {
 public:
  using Error::Error;
};

enum class SurfaceKind { Plane, FlatTorus, Sphere, Hyperboloid };
enum class CoordMode { Intrinsic2D, Ambient3D };

std::string_view to_string(SurfaceKind kind);
SurfaceKind surface_kind_from_string(std::string_view name);

class SurfaceModel {
 public:
  static SurfaceModel plane();
  static SurfaceModel flat_torus(double period_phi = kTwoPi, double period_z = kTwoPi);
  static SurfaceModel sphere();
  static SurfaceModel hyperboloid();

  SurfaceKind kind() const { return kind_; }
  CoordMode coord_mode() const;
  /// Number of meaningful components per point (2 or 3).
  int components() const { return coord_mode() == CoordMode::Intrinsic2D ? 2 : 3; }
  /// Sectional curvature: 0, +1 or -1.
  double curvature() const;
  /// Torus periods (phi, z). Meaningless for other kinds.
  const std::array<double, 2>& periods() const { return periods_; }
  bool is_compact() const;
  /// Closed-form injectivity radius; +inf on the non-compact models.
  double injectivity_radius() const;

  /// Signed violation of the defining equation (0 on the surface).
  double constraint_defect(const Vec3& p) const;
  bool contains(const Vec3& p, double tol = kSurfaceTolerance) const;
  /// Throws InvalidPointError when p is off the surface.
  void require_on_surface(const Vec3& p) const;

  /// Difference `to - from`, taken to the nearest lattice image on the torus.
  Vec3 displacement(const Vec3& from, const Vec3& to) const;
  /// Torus: reduce into [0, L_phi) x [0, L_z). Identity otherwise.
  Vec3 wrap(const Vec3& p) const;

  bool operator==(const SurfaceModel&) const = default;

 private:
  SurfaceModel(SurfaceKind kind, std::array<double, 2> periods) : kind_(kind), periods_(periods) {}

  SurfaceKind kind_;
  std::array<double, 2> periods_;
};

enum class FieldKind { ConstantStrength, ExactPotential };

std::string_view to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

/// Lorentz endomorphism Z. ConstantStrength is the rotation-by-B0 field on every
/// model; ExactPotential is the torus field with potential A = eps sin(z) dphi.
class MagneticField {
 public:
  static MagneticField constant(double B0);
  static MagneticField exact_torus(double epsilon);

  FieldKind kind() const { return kind_; }
  /// B0 for ConstantStrength, epsilon for ExactPotential.
  double strength() const { return strength_; }
  /// |Z|_{L^infinity}.
  double sup_norm() const;
  /// Field with Z replaced by lambda * Z.
  MagneticField scaled(double lambda) const;
  /// Throws Error when this field cannot live on the surface.
  void require_compatible(const SurfaceModel& surface) const;

  bool operator==(const MagneticField&) const = default;

 private:
  MagneticField(FieldKind kind, double strength) : kind_(kind), strength_(strength) {}

  FieldKind kind_;
  double strength_;
};

/// A global 1-form potential evaluated at a point, written as an ambient
/// covector: A_p(v) = form.dot(v). On the intrinsic models form = (a_phi, a_z, 0).
struct PotentialValue {
  bool exists = false;
  Vec3 form = Vec3::Zero();

  double a_phi() const { return form.x(); }
  double a_z() const { return form.y(); }
};

struct SmallEnergyThreshold {
  double radius;     ///< r(N)
  double threshold;  ///< r(N)^2 / (16 pi)
  bool compact;
};

Vec3 project_tangent(const SurfaceModel& surface, const Vec3& p, const Vec3& v);
Vec3 tension_correction(const SurfaceModel& surface, const Vec3& p, const Vec3& v);
Vec3 lorentz(const MagneticField& field, const SurfaceModel& surface, const Vec3& p, const Vec3& v);
Vec3 retract(const SurfaceModel& surface, const Vec3& p_raw);
double metric_dot(const SurfaceModel& surface, const Vec3& p, const Vec3& v, const Vec3& w);
PotentialValue potential_eval(const MagneticField& field, const SurfaceModel& surface, const Vec3& p);
SmallEnergyThreshold small_energy_threshold(const SurfaceModel& surface);

namespace detail {

// Unchecked kernels used inside the integrator, where stage points may sit
// slightly off the surface.
Vec3 project_tangent_unchecked(SurfaceKind kind, const Vec3& p, const Vec3& v);
Vec3 lorentz_unchecked(const MagneticField& field, SurfaceKind kind, const Vec3& p, const Vec3& v);
/// Point-independent bilinear form underlying metric_dot.
inline double metric_dot(SurfaceKind kind, const Vec3& v, const Vec3& w) {
  if (kind == SurfaceKind::Hyperboloid) return -v.x() * w.x() + v.y() * w.y() + v.z() * w.z();
  return v.dot(w);
}
/// Returns false instead of throwing when the retraction is undefined.
bool try_retract(SurfaceKind kind, const Vec3& p_raw, Vec3& out);

}  // namespace detail

}  // namespace mgflow
