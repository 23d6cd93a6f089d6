#include "mgflow/analytic.hpp"
#include "mgflow/analysis.hpp"

#include "doctest.h"

using namespace mgflow;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_vec(const Vec3& got, const Vec3& want, double tol = 1e-12) {
  INFO("got (" << got.transpose() << ") want (" << want.transpose() << ")");
  CHECK((got - want).norm() <= tol);
}

}  // namespace

TEST_CASE("torus_mode examples") {
  for (double s : {0.0, 0.3, 2.0, 5.5}) {
    check_vec(torus_mode({1, 1, 1, 1}, s, kInf), Vec3::Zero());
    check_vec(torus_mode({1, 2, 1, 1}, s, kInf), Vec3(0.5 * std::cos(s), -0.5 * std::sin(s), 0));
    check_vec(torus_mode({3, 0.7, -1.1, 2.5}, s, 0.0), Vec3(0.7 * std::cos(3 * s), -1.1 * std::sin(3 * s), 0));
  }
  CHECK_THROWS_AS(TorusModeParams({0, 1, 1, 1}).validate(), Error);
}

TEST_CASE("torus_mode solves the flow equations") {
  // phi_t = phi'' - B0 z', z_t = z'' + B0 phi', checked by finite differences
  const TorusModeParams p{2, 1.3, 0.4, 1.7};
  const double d = 1e-4;
  for (double s : {0.2, 1.9}) {
    for (double t : {0.1, 0.8}) {
      const Vec3 dt = (torus_mode(p, s, t + d) - torus_mode(p, s, t - d)) / (2 * d);
      const Vec3 ds = (torus_mode(p, s + d, t) - torus_mode(p, s - d, t)) / (2 * d);
      const Vec3 dss = (torus_mode(p, s + d, t) - 2 * torus_mode(p, s, t) + torus_mode(p, s - d, t)) / (d * d);
      CHECK(dt.x() == Approx(dss.x() - p.B0 * ds.y()).epsilon(1e-5).scale(1.0));
      CHECK(dt.y() == Approx(dss.y() + p.B0 * ds.x()).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("torus_magnetic_term examples") {
  for (const TorusModeParams& p : {TorusModeParams{1, 1, 1, 1}, TorusModeParams{2, 0.3, 1.5, -0.7}}) {
    CHECK(std::abs(torus_magnetic_term(p, 0.0)) <= 1e-14);
  }
  CHECK(torus_magnetic_term({1, 1, 1, 1}, kInf) == Approx(-kPi).epsilon(1e-15));
  CHECK(std::isfinite(torus_magnetic_term({2, 1, 0.5, 1.5}, kInf)));
  CHECK(torus_magnetic_term({1, 1, 0.5, 1.5}, kInf) == -kInf);
  CHECK(torus_magnetic_term({1, 1, 0.5, 1.5}, 40.0) < torus_magnetic_term({1, 1, 0.5, 1.5}, 20.0));
}

TEST_CASE("torus_drift examples") {
  for (double s : {0.0, 1.0, 4.0}) {
    check_vec(torus_drift(1.3, 0.5, s, 0.0), Vec3(s, 1.3 * std::cos(s), 0));
    check_vec(torus_drift(0.0, 0.5, s, 3.0), Vec3(s, 1.5, 0));
  }
  // mean z drifts at rate B0 for any mu
  double mean2 = 0.0, mean5 = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double s = kTwoPi * i / 64;
    mean2 += torus_drift(1.0, 0.5, s, 2.0).y() / 64;
    mean5 += torus_drift(1.0, 0.5, s, 5.0).y() / 64;
  }
  CHECK((mean5 - mean2) / 3.0 == Approx(0.5).epsilon(1e-12));
  CHECK(std::isfinite(torus_drift(1.0, 0.5, 0.3, 2.0).y()));
}

TEST_CASE("latitude ODE examples") {
  const auto fixed = latitude_ode_solve({kPi / 3, 0.5, Geometry::Sphere}, 5.0, 0.01);
  for (const auto& smp : fixed) CHECK(smp.theta == Approx(kPi / 3).epsilon(1e-12));
  CHECK(fixed.back().t == Approx(5.0));

  const auto up = latitude_ode_solve({1.2, 0.5, Geometry::Sphere}, 40.0, 0.01);
  for (std::size_t i = 1; i < up.size(); ++i) CHECK(up[i].theta >= up[i - 1].theta);
  CHECK(up.back().theta == Approx(kPi).epsilon(1e-6));

  const auto hyp = latitude_ode_solve({0.5, 2.0, Geometry::Hyperboloid}, 20.0, 0.01);
  CHECK(hyp.back().theta == Approx(std::log(2 + std::sqrt(3.0))).epsilon(1e-9));
  CHECK(std::log(2 + std::sqrt(3.0)) == Approx(1.316958).epsilon(1e-6));
  CHECK(latitude_theta_at({2.5, 2.0, Geometry::Hyperboloid}, 20.0, 0.01) == Approx(std::acosh(2.0)).epsilon(1e-9));

  CHECK(latitude_rhs(Geometry::Sphere, 0.5, 1.2) > 0.0);
  CHECK(latitude_rhs(Geometry::Sphere, 0.5, 0.5) < 0.0);
  CHECK_THROWS_AS(latitude_ode_solve({1.0, 0.5, Geometry::Sphere}, 1.0, 0.0), Error);
}

TEST_CASE("latitude ODE is fourth order") {
  const LatitudeOdeState s0{1.2, 0.5, Geometry::Sphere};
  const double ref = latitude_theta_at(s0, 2.0, 1e-4);
  const double e1 = std::abs(latitude_theta_at(s0, 2.0, 0.1) - ref);
  const double e2 = std::abs(latitude_theta_at(s0, 2.0, 0.05) - ref);
  CHECK(e1 / e2 == Approx(16.0).epsilon(0.15));
}

TEST_CASE("latitude_geodesic examples") {
  const double B0 = 0.6;
  const double r = std::sqrt(1 - B0 * B0);
  for (double s : {0.0, 1.0, 3.0}) {
    const Vec3 p = latitude_geodesic(Geometry::Sphere, std::acos(B0), B0, s);
    CHECK(p.z() == Approx(B0));
    CHECK(std::hypot(p.x(), p.y()) == Approx(r));
    const Vec3 q = latitude_geodesic(Geometry::Hyperboloid, std::acosh(2.0), 2.0, s);
    check_vec(q, Vec3(2, std::sqrt(3.0) * std::cos(s), std::sqrt(3.0) * std::sin(s)), 1e-12);
  }
  for (double b : {0.2, 0.5, 3.0}) {
    check_vec(latitude_geodesic(Geometry::Sphere, kPi / 3, b, 0.0), Vec3(std::sin(kPi / 3), 0, std::cos(kPi / 3)));
  }
  CHECK_THROWS_AS(latitude_geodesic(Geometry::Sphere, kPi / 2, 0.5, 0.0), Error);
}

TEST_CASE("latitude_geodesic loops are discrete magnetic geodesics") {
  for (const auto& [g, theta, B0] : {std::tuple{Geometry::Sphere, std::acos(0.5), 0.5},
                                     std::tuple{Geometry::Hyperboloid, std::acosh(2.0), 2.0}}) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 256; ++i) pts.push_back(latitude_geodesic(g, theta, B0, kTwoPi * i / 256));
    const auto surface = g == Geometry::Sphere ? SurfaceModel::sphere() : SurfaceModel::hyperboloid();
    CHECK(geodesic_residual(DiscreteLoop(surface, pts, kTwoPi), MagneticField::constant(B0)) <= 5e-3);
  }
}

TEST_CASE("plane_circle examples") {
  for (double s : {0.0, 0.7, 2.0}) CHECK(plane_circle(1.3, 1.3, s).norm() == Approx(1.0));
  for (double s : {0.0, 0.7, 2.0}) CHECK(plane_circle(2.0, 1.0, s).norm() == Approx(0.5));
  // orientation flips with the sign of B0
  const Vec3 a = plane_circle(2.0, 1.0, 0.1), b = plane_circle(-2.0, 1.0, 0.1);
  CHECK(a.y() * b.y() < 0.0);
  CHECK_THROWS_AS(plane_circle(0.0, 1.0, 0.0), Error);

  // analytic residual: gamma'' = Z(gamma') with Z(v) = B0 (v_y, -v_x)
  const double B0 = 2.0, s = 0.4, d = 1e-4;
  const Vec3 v = (plane_circle(B0, 1.0, s + d) - plane_circle(B0, 1.0, s - d)) / (2 * d);
  const Vec3 acc = (plane_circle(B0, 1.0, s + d) - 2 * plane_circle(B0, 1.0, s) + plane_circle(B0, 1.0, s - d)) / (d * d);
  CHECK((acc - B0 * Vec3(v.y(), -v.x(), 0)).norm() <= 1e-5);
}
