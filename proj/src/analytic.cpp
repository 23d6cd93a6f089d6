#include "mgflow/analytic.hpp"

#include <cmath>

namespace mgflow {

namespace {

// amplitude * exp(-rate * t), with a zero rate meaning "no decay" even at t = inf
double decayed(double amplitude, double rate, double t) {
  if (amplitude == 0.0) return 0.0;
  if (rate == 0.0) return amplitude;
  return amplitude * std::exp(-rate * t);
}

}  // namespace

void TorusModeParams::validate() const {
  if (k == 0) throw Error("torus mode needs k != 0");
}

Vec3 torus_mode(const TorusModeParams& p, double s, double t) {
  p.validate();
  const double k = p.k;
  const double fast = k * p.B0 + k * k;
  const double slow = -k * p.B0 + k * k;
  const double plus = 0.5 * (p.a + p.b);
  const double minus = 0.5 * (p.a - p.b);
  const double c = std::cos(k * s);
  const double sn = std::sin(k * s);
  return {decayed(plus * c, fast, t) + decayed(minus * c, slow, t),
          decayed(plus * sn, fast, t) - decayed(minus * sn, slow, t), 0.0};
}

double torus_magnetic_term(const TorusModeParams& p, double T) {
  p.validate();
  const double k = p.k;
  const double kb = k * p.B0;
  const double dm = p.b - p.a;
  const double dp = p.b + p.a;
  return -kPi * p.a * p.b * kb - decayed(0.25 * kPi * dm * dm * kb, 2.0 * (k * k - kb), T) +
         decayed(0.25 * kPi * dp * dp * kb, 2.0 * (k * k + kb), T);
}

Vec3 torus_drift(double mu, double B0, double s, double t) {
  const double grow = std::exp((B0 - 1.0) * t);
  const double decay = std::exp(-(B0 + 1.0) * t);
  return {s + 0.5 * mu * std::sin(s) * (grow - decay), B0 * t + 0.5 * mu * std::cos(s) * (grow + decay), 0.0};
}

std::string_view to_string(Geometry g) { return g == Geometry::Sphere ? "Sphere" : "Hyperboloid"; }

double latitude_rhs(Geometry geometry, double B0, double theta) {
  if (geometry == Geometry::Sphere) return std::sin(theta) * (B0 - std::cos(theta));
  return std::sinh(theta) * (B0 - std::cosh(theta));
}

std::vector<ThetaSample> latitude_ode_solve(const LatitudeOdeState& state0, double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("latitude ODE needs dt > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error("latitude ODE needs a finite t_end >= 0");
  if (state0.geometry == Geometry::Sphere && !(state0.theta >= 0.0 && state0.theta <= kPi)) {
    throw Error("sphere latitude must lie in [0, pi]");
  }
  if (state0.geometry == Geometry::Hyperboloid && !(state0.theta >= 0.0)) {
    throw Error("hyperbolic latitude must be >= 0");
  }
  auto f = [&](double th) { return latitude_rhs(state0.geometry, state0.B0, th); };
  std::vector<ThetaSample> out{{0.0, state0.theta}};
  double t = 0.0;
  double th = state0.theta;
  const double eps = 1e-12 * std::max(1.0, t_end);
  while (t < t_end - eps) {
    const double h = std::min(dt, t_end - t);
    const double k1 = f(th);
    const double k2 = f(th + 0.5 * h * k1);
    const double k3 = f(th + 0.5 * h * k2);
    const double k4 = f(th + h * k3);
    th += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    t += h;
    out.push_back({t, th});
  }
  return out;
}

double latitude_theta_at(const LatitudeOdeState& state0, double t, double dt) {
  return latitude_ode_solve(state0, t, dt).back().theta;
}

Vec3 latitude_geodesic(Geometry geometry, double theta0, double B0, double s) {
  if (geometry == Geometry::Sphere) {
    const double c = std::cos(theta0);
    if (std::abs(c) < 1e-14) throw Error("latitude rate B0/cos(theta0) undefined at the equator");
    const double w = B0 / c * s;
    return {std::sin(theta0) * std::cos(w), std::sin(theta0) * std::sin(w), c};
  }
  const double w = B0 / std::cosh(theta0) * s;
  return {std::cosh(theta0), std::sinh(theta0) * std::cos(w), std::sinh(theta0) * std::sin(w)};
}

Vec3 plane_circle(double B0, double speed, double s) {
  if (B0 == 0.0) throw Error("no closed orbit without a field (B0 = 0)");
  const double r = speed / std::abs(B0);
  return {r * std::cos(-B0 * s), r * std::sin(-B0 * s), 0.0};
}

}  // namespace mgflow
