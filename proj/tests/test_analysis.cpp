#include "mgflow/analysis.hpp"
#include "mgflow/analytic.hpp"

#include "doctest.h"

using namespace mgflow;
using doctest::Approx;

namespace {

FlowConfig desk(double t_max = 50.0) {
  FlowConfig c;
  c.t_max = t_max;
  return c;
}

DiscreteLoop torus_circle(double eps, std::size_t n) { return make_loop(LoopGenerator::fourier_mode(1, eps, eps), n); }

// Three consecutive states around t = t_mid for bochner1_residual.
std::array<FlowState, 3> around(const DiscreteLoop& loop, const MagneticField& field, double t_mid, double dt) {
  FlowState a = advance(FlowState(loop), field, t_mid - dt, dt);
  FlowState b = step(a, field, dt);
  FlowState c = step(b, field, dt);
  return {a, b, c};
}

}  // namespace

TEST_CASE("geodesic_residual examples") {
  const double B0 = 0.5;
  CHECK(geodesic_residual(make_loop(LoopGenerator::sphere_latitude(std::acos(B0)), 256), MagneticField::constant(B0)) <=
        5e-3);
  CHECK(geodesic_residual(make_loop(LoopGenerator::torus_graph(0.0), 64), MagneticField::constant(0.0)) <= 1e-10);
  CHECK(geodesic_residual(make_loop(LoopGenerator::fourier_mode(1, 0.5, -0.5), 256), MagneticField::constant(1.0)) <=
        5e-3);
  // the hyperbolic limit curve too
  CHECK(geodesic_residual(make_loop(LoopGenerator::hyperbolic_latitude(std::acosh(2.0)), 256),
                          MagneticField::constant(2.0)) <= 5e-3);
}

TEST_CASE("energy_identity_defect examples") {
  SUBCASE("stationary run") {
    const double B0 = 0.5;
    const auto out = run(make_loop(LoopGenerator::sphere_latitude(std::acos(B0)), 128), MagneticField::constant(B0),
                         desk());
    CHECK(out.classification == Classification::ConvergedNontrivial);
    CHECK(energy_identity_defect(out.series, out.series.front().kinetic) <= 1e-8);
  }
  SUBCASE("flux term against the closed form at T=5") {
    const auto loop = make_loop(LoopGenerator::fourier_mode(1, 1, 1), 256);
    const auto st = advance(FlowState(loop), MagneticField::constant(1.0), 5.0, stable_dt(loop, 0.9));
    const double exact = -kPi + kPi * std::exp(-20.0);
    CHECK(torus_magnetic_term({1, 1, 1, 1}, 5.0) == Approx(exact).epsilon(1e-12));
    CHECK(std::abs(st.flux_term - exact) <= 5e-3);
  }
  SUBCASE("t=0 defect vanishes") {
    const auto loop = make_loop(LoopGenerator::fourier_mode(1, 2, 1), 64);
    const auto rec = make_record(loop, MagneticField::constant(1.0), 0.0, 0.0, 0.0);
    CHECK(energy_identity_defect({rec}, rec.kinetic) == 0.0);
  }
}

TEST_CASE("energy identity holds on every run family and refines") {
  for (const auto& [gen, field] : std::vector<std::pair<LoopGenerator, MagneticField>>{
           {LoopGenerator::fourier_mode(1, 2, 1), MagneticField::constant(1.5)},
           {LoopGenerator::fourier_mode(2, 1, 0.5), MagneticField::exact_torus(0.8)},
           {LoopGenerator::sphere_latitude(1.2), MagneticField::constant(0.5)},
           {LoopGenerator::hyperbolic_latitude(0.5), MagneticField::constant(2.0)},
           {LoopGenerator::plane_circle(1.0), MagneticField::constant(0.3)},
       }) {
    std::vector<double> defects;
    for (std::size_t n : {32, 64}) {
      const auto loop = make_loop(gen, n);
      const auto out = run(loop, field, desk(1.0));
      defects.push_back(energy_identity_defect(out.series, out.series.front().kinetic));
      CHECK(defects.back() <= default_slack(stable_dt(loop, 0.9), loop.spacing()));
    }
    INFO(to_string(gen.kind));
    CHECK(defects[0] / std::max(defects[1], 1e-300) >= 1.8);
  }
}

TEST_CASE("ottarsson_check examples") {
  SUBCASE("small torus circle gives equality for constant one") {
    const double eps = 0.05;
    const auto r = ottarsson_check(torus_circle(eps, 512));
    CHECK(r.lhs == Approx(kTwoPi * eps * eps).epsilon(1e-4));
    CHECK(r.rhs == Approx(kTwoPi * eps * eps).epsilon(1e-4));
    CHECK(r.constant_one);
    CHECK(r.quarter_pi_squared);
  }
  SUBCASE("constant loop") {
    const DiscreteLoop c(SurfaceModel::flat_torus(), std::vector<Vec3>(16, Vec3(1, 1, 0)), kTwoPi);
    const auto r = ottarsson_check(c);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.constant_one);
    CHECK(r.quarter_pi_squared);
  }
  SUBCASE("closed torus geodesic violates both") {
    const auto r = ottarsson_check(make_loop(LoopGenerator::torus_graph(0.0), 64));
    CHECK(r.lhs == Approx(kTwoPi).epsilon(1e-12));
    CHECK(r.rhs <= 1e-20);
    CHECK_FALSE(r.constant_one);
    CHECK_FALSE(r.quarter_pi_squared);
    CHECK_FALSE(ottarsson_applicable(make_loop(LoopGenerator::torus_graph(0.0), 64)));
  }
}

TEST_CASE("kinetic_decay_check examples") {
  SUBCASE("small circle, B0=0.5, constant one") {
    const auto loop = torus_circle(0.05, 256);
    const auto out = run(loop, MagneticField::constant(0.5), desk());
    const auto dc = kinetic_decay_check(loop, out.series, 0.5, kOttarssonFlat, default_slack(stable_dt(loop, 0.9), loop.spacing()));
    CHECK(dc.applicable);
    CHECK(dc.holds);
    // measured decay is e^{-3t}, well inside e^{-0.75t}
    const auto& late = out.series[out.series.size() / 2];
    CHECK(late.kinetic <= out.series.front().kinetic * std::exp(-2.5 * late.time) + 1e-12);
  }
  SUBCASE("pure heat flow") {
    const auto loop = torus_circle(0.05, 128);
    const auto out = run(loop, MagneticField::constant(0.0), desk(3.0));
    const auto dc = kinetic_decay_check(loop, out.series, 0.0, kOttarssonFlat, 0.0);
    CHECK(dc.holds);
    const auto& last = out.series.back();
    CHECK(last.kinetic == Approx(out.series.front().kinetic * std::exp(-2 * last.time)).epsilon(1e-2));
  }
  SUBCASE("stationary latitude is not small") {
    const auto loop = make_loop(LoopGenerator::sphere_latitude(kPi / 3), 128);
    const auto out = run(loop, MagneticField::constant(0.5), desk());
    const auto dc = kinetic_decay_check(loop, out.series, 0.5, kOttarssonGeneral, 0.0);
    CHECK_FALSE(dc.applicable);
    CHECK(dc.holds);
  }
}

TEST_CASE("bochner1_residual examples") {
  SUBCASE("stationary magnetic geodesic") {
    const double B0 = 0.5;
    const auto loop = make_loop(LoopGenerator::sphere_latitude(std::acos(B0)), 128);
    const auto f = MagneticField::constant(B0);
    const double dt = stable_dt(loop, 0.9);
    const auto s = around(loop, f, 2 * dt, dt);
    CHECK(bochner1_residual(s[0], s[1], s[2], f) <= 1e-6);
  }
  SUBCASE("constant loop") {
    const DiscreteLoop c(SurfaceModel::flat_torus(), std::vector<Vec3>(16, Vec3(1, 1, 0)), kTwoPi);
    const auto f = MagneticField::constant(1.0);
    const FlowState s0(c);
    const auto s1 = step(s0, f, 1e-3);
    CHECK(bochner1_residual(s0, s1, step(s1, f, 1e-3), f) == 0.0);
  }
  SUBCASE("torus mode, second-order refinement") {
    const auto f = MagneticField::constant(0.5);
    std::vector<double> res;
    for (std::size_t n : {32, 64, 128}) {
      const auto loop = make_loop(LoopGenerator::fourier_mode(1, 1, 1), n);
      const double dt = stable_dt(loop, 0.9);
      const auto s = around(loop, f, 1.0, dt);
      res.push_back(bochner1_residual(s[0], s[1], s[2], f));
    }
    CHECK(res[0] / res[1] >= 3.5);
    CHECK(res[0] / res[1] <= 4.5);
    CHECK(res[1] / res[2] >= 3.5);
    CHECK(res[1] / res[2] <= 4.5);
  }
}

TEST_CASE("second_variation examples") {
  const std::size_t n = 256;
  const DiscreteLoop point(SurfaceModel::flat_torus(), std::vector<Vec3>(n, Vec3(2, 3, 0)), kTwoPi);
  VariationField cosine(n), constant(n, Vec3(0.4, 0.1, 0));
  for (std::size_t i = 0; i < n; ++i) cosine[i] = Vec3(std::cos(point.parameter(i)), 0, 0);
  for (double B0 : {0.0, 0.7, -3.0}) CHECK(std::abs(second_variation(point, MagneticField::constant(B0), cosine) - kPi) <= 1e-3);
  CHECK(std::abs(second_variation(point, MagneticField::constant(1.0), constant)) <= 1e-12);

  const auto great = make_loop(LoopGenerator::sphere_latitude(kPi / 2), n);
  const VariationField normal(n, Vec3(0, 0, 1));
  CHECK(std::abs(second_variation(great, MagneticField::constant(0.0), normal) + kTwoPi) <= 2e-2);

  CHECK_THROWS_AS(second_variation(great, MagneticField::constant(0.0), VariationField(n - 1)), Error);
}

TEST_CASE("property: second variation is an even quadratic form") {
  const auto loop = make_loop(LoopGenerator::sphere_latitude(1.0), 128);
  const auto f = MagneticField::constant(0.8);
  VariationField eta(loop.size());
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Vec3& p = loop.samples()[i];
    eta[i] = project_tangent(loop.surface(), p, Vec3(std::sin(3.0 * i / 10), 0.3, std::cos(0.1 * i)));
  }
  VariationField twice = eta, minus = eta;
  for (auto& v : twice) v *= 2.0;
  for (auto& v : minus) v = -v;
  const double q = second_variation(loop, f, eta);
  CHECK(second_variation(loop, f, minus) == Approx(q).epsilon(1e-12));
  CHECK(second_variation(loop, f, twice) == Approx(4 * q).epsilon(1e-6));
}

TEST_CASE("sup_bound_check examples") {
  SUBCASE("heat flow") {
    const auto out = run(torus_circle(0.5, 64), MagneticField::constant(0.0), desk(2.0));
    CHECK(sup_bound_check(out.series, 0.0, 0.0).holds);
    for (std::size_t i = 1; i < out.series.size(); ++i) CHECK(out.series[i].speed_max <= out.series[i - 1].speed_max + 1e-15);
  }
  SUBCASE("torus B0=1 decays as e^{-4t}") {
    const auto out = run(make_loop(LoopGenerator::fourier_mode(1, 1, 1), 128), MagneticField::constant(1.0), desk(2.0));
    const auto sb = sup_bound_check(out.series, 1.0, 0.0);
    CHECK(sb.holds);
    CHECK_FALSE(sb.equality);
  }
  SUBCASE("diverging run meets the bound with equality") {
    const auto loop = make_loop(LoopGenerator::fourier_mode(1, 2, 1), 128);
    const auto out = run(loop, MagneticField::constant(2.0), desk());
    REQUIRE(out.classification == Classification::Diverged);
    const auto sb = sup_bound_check(out.series, 2.0, default_slack(stable_dt(loop, 0.9), loop.spacing()));
    CHECK(sb.holds);
    CHECK(sb.equality);
  }
}

TEST_CASE("classify_limit examples") {
  SUBCASE("point") {
    const auto out = run(torus_circle(0.05, 64), MagneticField::constant(0.5), desk());
    REQUIRE(out.classification == Classification::ConvergedPoint);
    const auto r = classify_limit(out, MagneticField::constant(0.5));
    CHECK(r.trivial);
    CHECK(r.winding == std::array<int, 2>{0, 0});
  }
  SUBCASE("torus circle") {
    // the decaying mode is still visible in the speed at the default residual
    // tolerance; the discrete circle itself drifts at relative rate h^2/12, so
    // the tighter tolerance needs n = 256
    FlowConfig c = desk();
    c.tol_residual = 1e-4;
    const auto out = run(make_loop(LoopGenerator::fourier_mode(1, 2, 1), 256), MagneticField::constant(1.0), c);
    const auto r = classify_limit(out, MagneticField::constant(1.0));
    CHECK_FALSE(r.trivial);
    CHECK(r.speed_variation <= 1e-4);
  }
  SUBCASE("hyperbolic") {
    const auto f = MagneticField::constant(2.0);
    const auto out = run(make_loop(LoopGenerator::hyperbolic_latitude(0.5), 128), f, desk());
    const auto r = classify_limit(out, f);
    CHECK_FALSE(r.trivial);
    CHECK(r.residual <= 1e-3);
  }
  SUBCASE("not converged") {
    const auto out = run(make_loop(LoopGenerator::torus_graph(1.0), 32), MagneticField::constant(0.5), desk(1.0));
    CHECK_THROWS_AS(classify_limit(out, MagneticField::constant(0.5)), Error);
  }
}

TEST_CASE("mutation: a sign error in the Lorentz term fails the threshold criterion") {
  // negating the field swaps which circle survives, so the B0=1 limit shape is wrong
  const auto loop = make_loop(LoopGenerator::fourier_mode(1, 2, 1), 128);
  const auto out = run(loop, MagneticField::constant(-1.0), desk());
  double err = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const double s = loop.parameter(i);
    err = std::max(err, (out.final.loop.samples()[i] - Vec3(0.5 * std::cos(s), -0.5 * std::sin(s), 0)).norm());
  }
  CHECK(err > 0.5);
}
