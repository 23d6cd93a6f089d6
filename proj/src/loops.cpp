#include "mgflow/loops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace mgflow {

namespace {

bool intrinsic(const SurfaceModel& surface) { return surface.coord_mode() == CoordMode::Intrinsic2D; }

Vec3 evaluate(const LoopGenerator& gen, double s) {
  switch (gen.kind) {
    case GeneratorKind::FourierMode: return {gen.a * std::cos(gen.k * s), gen.b * std::sin(gen.k * s), 0.0};
    case GeneratorKind::TorusGraph: return {s, gen.mu * std::cos(s), 0.0};
    case GeneratorKind::SphereLatitude: {
      const double st = std::sin(gen.theta0);
      return {st * std::cos(gen.rate * s), st * std::sin(gen.rate * s), std::cos(gen.theta0)};
    }
    case GeneratorKind::HyperbolicLatitude: {
      const double sh = std::sinh(gen.theta0);
      return {std::cosh(gen.theta0), sh * std::cos(gen.rate * s), sh * std::sin(gen.rate * s)};
    }
    case GeneratorKind::PlaneCircle:
      return gen.center + gen.radius * Vec3(std::cos(gen.rate * s), std::sin(gen.rate * s), 0.0);
    case GeneratorKind::ExplicitSamples: break;
  }
  return Vec3::Zero();
}

bool compatible(GeneratorKind kind, SurfaceKind surface) {
  switch (kind) {
    case GeneratorKind::FourierMode:
    case GeneratorKind::PlaneCircle:
      return surface == SurfaceKind::Plane || surface == SurfaceKind::FlatTorus;
    case GeneratorKind::TorusGraph: return surface == SurfaceKind::FlatTorus;
    case GeneratorKind::SphereLatitude: return surface == SurfaceKind::Sphere;
    case GeneratorKind::HyperbolicLatitude: return surface == SurfaceKind::Hyperboloid;
    case GeneratorKind::ExplicitSamples: return true;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteLoop

DiscreteLoop::DiscreteLoop(SurfaceModel surface, std::vector<Vec3> samples, double circle_length)
    : DiscreteLoop(surface, std::move(samples), circle_length, Vec3::Constant(std::nan(""))) {}

DiscreteLoop::DiscreteLoop(SurfaceModel surface, std::vector<Vec3> samples, double circle_length, const Vec3& closure)
    : surface_(surface), samples_(std::move(samples)), circle_length_(circle_length) {
  if (samples_.size() < kMinSamples) {
    throw ConstructionError("a loop needs at least " + std::to_string(kMinSamples) + " samples, got " +
                            std::to_string(samples_.size()));
  }
  if (!(circle_length_ > 0.0) || !std::isfinite(circle_length_)) {
    throw ConstructionError("circle length must be positive and finite");
  }
  for (const auto& p : samples_) surface_.require_on_surface(p);
  if (surface_.kind() != SurfaceKind::FlatTorus) {
    if (closure.allFinite() && closure.norm() != 0.0) throw ConstructionError("closure must vanish off the torus");
    return;
  }
  // NaN closure: lift the chain edge by edge through nearest images, then read
  // the closure off the last edge
  if (!closure.allFinite()) {
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      samples_[i] = samples_[i - 1] + surface_.displacement(samples_[i - 1], samples_[i]);
    }
  }
  const Vec3 raw = closure.allFinite()
                       ? closure
                       : Vec3(samples_.back() + surface_.displacement(samples_.back(), samples_.front()) -
                              samples_.front());
  closure_ = detail::snap_to_lattice(surface_, raw);
  for (int c = 0; c < 2; ++c) {
    const double turns = raw[c] / surface_.periods()[c];
    if (!(std::abs(turns - std::round(turns)) <= 1e-6)) {
      throw InconsistentLoopError("non-integer winding " + std::to_string(turns));
    }
  }
}

const Vec3& DiscreteLoop::sample(std::ptrdiff_t i) const {
  const auto n = static_cast<std::ptrdiff_t>(samples_.size());
  i %= n;
  if (i < 0) i += n;
  return samples_[static_cast<std::size_t>(i)];
}

// ---------------------------------------------------------------------------
// Generators

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::FourierMode: return "FourierMode";
    case GeneratorKind::TorusGraph: return "TorusGraph";
    case GeneratorKind::SphereLatitude: return "SphereLatitude";
    case GeneratorKind::HyperbolicLatitude: return "HyperbolicLatitude";
    case GeneratorKind::PlaneCircle: return "PlaneCircle";
    case GeneratorKind::ExplicitSamples: return "ExplicitSamples";
  }
  return "?";
}

GeneratorKind generator_kind_from_string(std::string_view name) {
  for (auto kind : {GeneratorKind::FourierMode, GeneratorKind::TorusGraph, GeneratorKind::SphereLatitude,
                    GeneratorKind::HyperbolicLatitude, GeneratorKind::PlaneCircle, GeneratorKind::ExplicitSamples}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error("unknown initial-curve kind '" + std::string(name) + "'");
}

LoopGenerator LoopGenerator::fourier_mode(int k, double a, double b) {
  LoopGenerator g;
  g.kind = GeneratorKind::FourierMode;
  g.k = k;
  g.a = a;
  g.b = b;
  return g;
}

LoopGenerator LoopGenerator::torus_graph(double mu) {
  LoopGenerator g;
  g.kind = GeneratorKind::TorusGraph;
  g.mu = mu;
  return g;
}

LoopGenerator LoopGenerator::sphere_latitude(double theta0, double rate) {
  LoopGenerator g;
  g.kind = GeneratorKind::SphereLatitude;
  g.theta0 = theta0;
  g.rate = rate;
  return g;
}

LoopGenerator LoopGenerator::hyperbolic_latitude(double theta0, double rate) {
  LoopGenerator g;
  g.kind = GeneratorKind::HyperbolicLatitude;
  g.theta0 = theta0;
  g.rate = rate;
  return g;
}

LoopGenerator LoopGenerator::plane_circle(double radius, Vec3 center, double rate) {
  LoopGenerator g;
  g.kind = GeneratorKind::PlaneCircle;
  g.radius = radius;
  g.center = center;
  g.rate = rate;
  return g;
}

LoopGenerator LoopGenerator::explicit_samples(std::vector<Vec3> samples) {
  LoopGenerator g;
  g.kind = GeneratorKind::ExplicitSamples;
  g.samples = std::move(samples);
  return g;
}

SurfaceModel LoopGenerator::default_surface() const {
  switch (kind) {
    case GeneratorKind::SphereLatitude: return SurfaceModel::sphere();
    case GeneratorKind::HyperbolicLatitude: return SurfaceModel::hyperboloid();
    case GeneratorKind::PlaneCircle: return SurfaceModel::plane();
    default: return SurfaceModel::flat_torus();
  }
}

void LoopGenerator::validate() const {
  auto finite = [](double x) { return std::isfinite(x); };
  switch (kind) {
    case GeneratorKind::FourierMode:
      if (k == 0) throw ConstructionError("FourierMode requires k != 0");
      if (!finite(a) || !finite(b)) throw ConstructionError("FourierMode amplitudes must be finite");
      break;
    case GeneratorKind::TorusGraph:
      if (!finite(mu)) throw ConstructionError("TorusGraph mu must be finite");
      break;
    case GeneratorKind::SphereLatitude:
      if (!(theta0 > 0.0 && theta0 < kPi)) throw ConstructionError("SphereLatitude requires theta0 in (0, pi)");
      if (!finite(rate)) throw ConstructionError("latitude rate must be finite");
      break;
    case GeneratorKind::HyperbolicLatitude:
      if (!(theta0 > 0.0) || !finite(theta0)) throw ConstructionError("HyperbolicLatitude requires theta0 > 0");
      if (!finite(rate)) throw ConstructionError("latitude rate must be finite");
      break;
    case GeneratorKind::PlaneCircle:
      if (!(radius >= 0.0) || !finite(radius) || !center.allFinite() || !finite(rate)) {
        throw ConstructionError("PlaneCircle requires a finite radius >= 0, center and rate");
      }
      break;
    case GeneratorKind::ExplicitSamples:
      if (samples.size() < kMinSamples) throw ConstructionError("ExplicitSamples needs at least 8 samples");
      break;
  }
}

DiscreteLoop make_loop(const LoopGenerator& gen, const SurfaceModel& surface, std::size_t n, double circle_length) {
  gen.validate();
  if (!compatible(gen.kind, surface.kind())) {
    throw ConstructionError(std::string(to_string(gen.kind)) + " curves do not live on " +
                            std::string(to_string(surface.kind())));
  }
  if (gen.kind == GeneratorKind::ExplicitSamples) {
    if (n != gen.samples.size()) {
      throw ConstructionError("ExplicitSamples: n = " + std::to_string(n) + " but " +
                              std::to_string(gen.samples.size()) + " samples given");
    }
    return DiscreteLoop(surface, gen.samples, circle_length);
  }
  if (n < kMinSamples) throw ConstructionError("a loop needs at least 8 samples");
  if (!(circle_length > 0.0) || !std::isfinite(circle_length)) {
    throw ConstructionError("circle length must be positive and finite");
  }

  const Vec3 start = evaluate(gen, 0.0);
  const Vec3 end = evaluate(gen, circle_length);
  const Vec3 closure = detail::snap_to_lattice(surface, end - start);
  const double gap = (end - start - closure).norm();
  if (gap > 1e-9 * (1.0 + start.norm())) {
    throw ConstructionError(std::string(to_string(gen.kind)) + " does not close on a circle of length " +
                            std::to_string(circle_length) + " (gap " + std::to_string(gap) + ")");
  }

  std::vector<Vec3> samples(n);
  const double h = circle_length / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = evaluate(gen, h * static_cast<double>(i));
  return DiscreteLoop(surface, std::move(samples), circle_length, closure);
}

DiscreteLoop make_loop(const LoopGenerator& gen, std::size_t n, double circle_length) {
  return make_loop(gen, gen.default_surface(), n, circle_length);
}

// ---------------------------------------------------------------------------
// Calculus kernels

namespace detail {

Vec3 snap_to_lattice(const SurfaceModel& surface, const Vec3& v) {
  if (surface.kind() != SurfaceKind::FlatTorus) return Vec3::Zero();
  const auto& L = surface.periods();
  return {L[0] * std::round(v.x() / L[0]), L[1] * std::round(v.y() / L[1]), 0.0};
}

namespace {

struct Stencil {
  std::span<const Vec3> pts;
  Vec3 closure;
  std::size_t n;

  Vec3 prev(std::size_t i) const { return i == 0 ? Vec3(pts[n - 1] - closure) : pts[i - 1]; }
  Vec3 next(std::size_t i) const { return i + 1 == n ? Vec3(pts[0] + closure) : pts[i + 1]; }
};

bool curved(SurfaceKind kind) { return kind == SurfaceKind::Sphere || kind == SurfaceKind::Hyperboloid; }

}  // namespace

void velocities_and_tensions(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h,
                             std::span<Vec3> vel, std::span<Vec3> tau) {
  const Stencil st{pts, closure, pts.size()};
  const double inv2 = 1.0 / (h * h);
  const double inv1 = 0.5 / h;
  for (std::size_t i = 0; i < st.n; ++i) {
    const Vec3& p = pts[i];
    const Vec3 back = p - st.prev(i);
    const Vec3 fwd = st.next(i) - p;
    const Vec3 v = project_tangent_unchecked(kind, p, (fwd + back) * inv1);
    Vec3 acc = (fwd - back) * inv2;
    if (curved(kind)) {
      const double vv = metric_dot(kind, v, v);
      // +|v|^2 p on the sphere, -|v|^2 p on the hyperboloid.
      acc += (kind == SurfaceKind::Sphere ? vv : -vv) * p;
    }
    if (!vel.empty()) vel[i] = v;
    if (!tau.empty()) tau[i] = project_tangent_unchecked(kind, p, acc);
  }
}

void velocities(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h, std::span<Vec3> out) {
  velocities_and_tensions(kind, pts, closure, h, out, {});
}

void tensions(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h, std::span<Vec3> out) {
  velocities_and_tensions(kind, pts, closure, h, {}, out);
}

double edge_kinetic_energy(SurfaceKind kind, std::span<const Vec3> pts, const Vec3& closure, double h) {
  const Stencil st{pts, closure, pts.size()};
  double sum = 0.0;
  for (std::size_t i = 0; i < st.n; ++i) {
    const Vec3 d = st.next(i) - pts[i];
    sum += metric_dot(kind, d, d);
  }
  return 0.5 * sum / h;
}

}  // namespace detail

std::vector<Vec3> velocity(const DiscreteLoop& loop) {
  std::vector<Vec3> out(loop.size());
  detail::velocities(loop.surface().kind(), loop.samples(), loop.closure(), loop.spacing(), out);
  return out;
}

std::vector<Vec3> tension(const DiscreteLoop& loop) {
  std::vector<Vec3> out(loop.size());
  detail::tensions(loop.surface().kind(), loop.samples(), loop.closure(), loop.spacing(), out);
  return out;
}

double kinetic_energy(const DiscreteLoop& loop) {
  return detail::edge_kinetic_energy(loop.surface().kind(), loop.samples(), loop.closure(), loop.spacing());
}

std::optional<double> magnetic_energy(const DiscreteLoop& loop, const MagneticField& field) {
  const auto pts = loop.samples();
  if (!potential_eval(field, loop.surface(), pts[0]).exists) return std::nullopt;
  const auto vel = velocity(loop);
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) sum += potential_eval(field, loop.surface(), pts[i]).form.dot(vel[i]);
  return sum * loop.spacing();
}

std::array<int, 2> winding(const DiscreteLoop& loop) {
  const auto& surface = loop.surface();
  if (surface.kind() != SurfaceKind::FlatTorus) return {0, 0};
  const Vec3& c = loop.closure();
  return {static_cast<int>(std::lround(c.x() / surface.periods()[0])),
          static_cast<int>(std::lround(c.y() / surface.periods()[1]))};
}

double diameter(const DiscreteLoop& loop) {
  const auto& surface = loop.surface();
  const auto pts = loop.samples();
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::max(best, surface.displacement(pts[i], pts[j]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

std::pair<double, double> speed_stats(const DiscreteLoop& loop) {
  const auto vel = velocity(loop);
  const SurfaceKind kind = loop.surface().kind();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& v : vel) {
    const double speed = std::sqrt(std::max(0.0, detail::metric_dot(kind, v, v)));
    lo = std::min(lo, speed);
    hi = std::max(hi, speed);
  }
  return {lo, hi};
}

void write_loop_csv(std::ostream& os, const DiscreteLoop& loop) {
  const auto& surface = loop.surface();
  const bool flat = intrinsic(surface);
  os << (flat ? "s,x1,x2\n" : "s,x1,x2,x3\n");
  os << std::setprecision(17);
  const auto pts = loop.samples();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 p = surface.wrap(pts[i]);
    os << loop.parameter(i) << ',' << p.x() << ',' << p.y();
    if (!flat) os << ',' << p.z();
    os << '\n';
  }
}

}  // namespace mgflow
