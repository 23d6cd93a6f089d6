#pragma once

// Closed-form solutions and one-dimensional reductions used as references.

#include "mgflow/surfaces.hpp"

#include <vector>

namespace mgflow {

struct TorusModeParams {
  int k = 1;
  double a = 1.0;
  double b = 1.0;
  double B0 = 1.0;

  /// Throws Error when k == 0.
  void validate() const;
};

/// (phi, z, 0) of the single Fourier mode solution on the torus. t may be +inf.
Vec3 torus_mode(const TorusModeParams& p, double s, double t);

/// Accumulated int_0^T int Omega(dot gamma, gamma') for the Fourier mode. T may be +inf.
double torus_magnetic_term(const TorusModeParams& p, double T);

/// (phi, z, 0) of the winding solution starting at (s, mu cos s).
Vec3 torus_drift(double mu, double B0, double s, double t);

enum class Geometry { Sphere, Hyperboloid };

std::string_view to_string(Geometry g);

struct LatitudeOdeState {
  double theta = 0.0;
  double B0 = 0.0;
  Geometry geometry = Geometry::Sphere;
};

/// sin(theta)(B0 - cos(theta)) on the sphere, sinh(theta)(B0 - cosh(theta)) on the hyperboloid.
double latitude_rhs(Geometry geometry, double B0, double theta);

struct ThetaSample {
  double t = 0.0;
  double theta = 0.0;
};

/// RK4 with fixed step dt; the last step is shortened to land on t_end.
std::vector<ThetaSample> latitude_ode_solve(const LatitudeOdeState& state0, double t_end, double dt);

/// theta at time t, integrated with steps no larger than dt.
double latitude_theta_at(const LatitudeOdeState& state0, double t, double dt);

/// Latitude magnetic geodesic through angle theta0, angular rate B0/cos(theta0) or B0/cosh(theta0).
Vec3 latitude_geodesic(Geometry geometry, double theta0, double B0, double s);

/// Planar magnetic geodesic of the given speed: radius speed/|B0|, angle -B0 s, centred at 0.
Vec3 plane_circle(double B0, double speed, double s);

}  // namespace mgflow
