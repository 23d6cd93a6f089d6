#pragma once

// Closed curves sampled uniformly on a circle of length 2*pi*r, with periodic
// finite-difference calculus.

#include "mgflow/surfaces.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mgflow {

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class InconsistentLoopError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kMinSamples = 8;
inline constexpr std::size_t kDefaultSamples = 256;

class DiscreteLoop {
 public:
  /// Validates n >= 8, finite positive circle length and on-surface samples.
  /// Torus samples may be wrapped: the chain is lifted to the universal cover
  /// through nearest images and the closing lattice translation read off the
  /// last edge.
  DiscreteLoop(SurfaceModel surface, std::vector<Vec3> samples, double circle_length);
  /// Torus samples on the universal cover with sample(n) = sample(0) + closure.
  /// `closure` must be a lattice vector (zero off the torus).
  DiscreteLoop(SurfaceModel surface, std::vector<Vec3> samples, double circle_length, const Vec3& closure);

  const SurfaceModel& surface() const { return surface_; }
  std::size_t size() const { return samples_.size(); }
  double circle_length() const { return circle_length_; }
  /// Uniform parameter spacing h = circle_length / n.
  double spacing() const { return circle_length_ / static_cast<double>(samples_.size()); }
  /// Parameter value of sample i.
  double parameter(std::size_t i) const { return spacing() * static_cast<double>(i); }

  std::span<const Vec3> samples() const { return samples_; }
  /// Periodic access: sample(n) == sample(0).
  const Vec3& sample(std::ptrdiff_t i) const;
  /// Lattice translation between the lift of sample(n) and sample(0).
  const Vec3& closure() const { return closure_; }

 private:
  SurfaceModel surface_;
  std::vector<Vec3> samples_;
  double circle_length_;
  Vec3 closure_ = Vec3::Zero();
};

enum class GeneratorKind { FourierMode, TorusGraph, SphereLatitude, HyperbolicLatitude, PlaneCircle, ExplicitSamples };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);

/// Parametrised families of initial curves. Unused fields keep their defaults.
struct LoopGenerator {
  GeneratorKind kind = GeneratorKind::FourierMode;
  int k = 1;                 // FourierMode: (a cos ks, b sin ks)
  double a = 1.0;
  double b = 1.0;
  double mu = 0.0;           // TorusGraph: (s, mu cos s)
  double theta0 = 0.0;       // latitudes
  double rate = 1.0;         // angular rate in s (latitudes, plane circle)
  double radius = 1.0;       // PlaneCircle
  Vec3 center = Vec3::Zero();
  std::vector<Vec3> samples; // ExplicitSamples

  static LoopGenerator fourier_mode(int k, double a, double b);
  static LoopGenerator torus_graph(double mu);
  static LoopGenerator sphere_latitude(double theta0, double rate = 1.0);
  static LoopGenerator hyperbolic_latitude(double theta0, double rate = 1.0);
  static LoopGenerator plane_circle(double radius, Vec3 center = Vec3::Zero(), double rate = 1.0);
  static LoopGenerator explicit_samples(std::vector<Vec3> samples);

  /// Surface the family lives on by default (torus families use 2pi x 2pi).
  SurfaceModel default_surface() const;
  /// Throws ConstructionError on invalid parameters.
  void validate() const;

  bool operator==(const LoopGenerator&) const = default;
};

DiscreteLoop make_loop(const LoopGenerator& gen, const SurfaceModel& surface, std::size_t n, double circle_length);
DiscreteLoop make_loop(const LoopGenerator& gen, std::size_t n = kDefaultSamples, double circle_length = kTwoPi);

/// Central differences, projected to the tangent space at each sample.
std::vector<Vec3> velocity(const DiscreteLoop& loop);
/// Second difference plus normal correction, projected to the tangent space.
std::vector<Vec3> tension(const DiscreteLoop& loop);

/// 1/2 sum_i |s[i+1] - s[i]|^2 / h, i.e. the kinetic energy of the edge
/// velocities. Its time derivative along the discrete flow is exactly
/// -sum <tension, dot gamma> h, so the discrete energy identity closes.
double kinetic_energy(const DiscreteLoop& loop);
/// sum_i A(gamma_i)(velocity_i) h; empty when the field has no global potential.
std::optional<double> magnetic_energy(const DiscreteLoop& loop, const MagneticField& field);

/// Torus: closure / periods, i.e. (windings in phi, windings in z). Other surfaces: (0, 0).
std::array<int, 2> winding(const DiscreteLoop& loop);
/// Largest pairwise distance (ambient chord, or torus distance).
double diameter(const DiscreteLoop& loop);
/// (min |gamma'|, max |gamma'|) over the central-difference velocities.
std::pair<double, double> speed_stats(const DiscreteLoop& loop);

/// Header "s,x1,x2[,x3]"; torus coordinates wrapped into the fundamental domain.
void write_loop_csv(std::ostream& os, const DiscreteLoop& loop);

namespace detail {

// Kernels on raw sample arrays; used by both the loop API and the integrator.
// Neighbour differences are plain differences, with `closure` added across the seam.
void velocities(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h, std::span<Vec3> out);
void tensions(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h, std::span<Vec3> out);
void velocities_and_tensions(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h,
                             std::span<Vec3> vel, std::span<Vec3> tau);
double edge_kinetic_energy(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h);
/// Nearest lattice vector (torus); zero elsewhere.
Vec3 snap_to_lattice(const SurfaceModel& surface, const Vec3& v);

}  // namespace detail

}  // namespace mgflow
