#include "mgflow/serialize.hpp"

#include <cmath>
#include <fstream>

namespace mgflow {

void Issues::add(const std::string& pointer, const std::string& message) const {
  const std::string text = (pointer.empty() ? std::string("/") : pointer) + ": " + message;
  if (!sink_) throw Error(text);
  sink_->push_back(text);
}

JsonReader::JsonReader(const json& j, std::string pointer, const Issues& issues)
    : j_(j), pointer_(std::move(pointer)), issues_(issues) {
  if (!j_.is_object()) {
    issues_.add(pointer_, "expected an object");
    ok_ = false;
  }
}

bool JsonReader::has(const char* key) const { return ok_ && j_.contains(key); }

const json* JsonReader::member(const char* key, bool required) const {
  if (!ok_) return nullptr;
  auto it = j_.find(key);
  if (it == j_.end()) {
    if (required) issues_.add(path(key), "missing");
    return nullptr;
  }
  return &*it;
}

double JsonReader::number(const char* key, double fallback, bool required) const {
  const json* m = member(key, required);
  if (!m) return fallback;
  if (!m->is_number()) {
    issues_.add(path(key), "expected a number");
    return fallback;
  }
  const double x = m->get<double>();
  if (!std::isfinite(x)) {
    issues_.add(path(key), "must be finite");
    return fallback;
  }
  return x;
}

std::int64_t JsonReader::integer(const char* key, std::int64_t fallback, bool required) const {
  const json* m = member(key, required);
  if (!m) return fallback;
  if (m->is_number_integer()) return m->get<std::int64_t>();
  if (m->is_number_float()) {
    const double x = m->get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<std::int64_t>(x);
  }
  issues_.add(path(key), "expected an integer");
  return fallback;
}

std::string JsonReader::string(const char* key, const std::string& fallback, bool required) const {
  const json* m = member(key, required);
  if (!m) return fallback;
  if (!m->is_string()) {
    issues_.add(path(key), "expected a string");
    return fallback;
  }
  return m->get<std::string>();
}

bool JsonReader::boolean(const char* key, bool fallback, bool required) const {
  const json* m = member(key, required);
  if (!m) return fallback;
  if (!m->is_boolean()) {
    issues_.add(path(key), "expected true or false");
    return fallback;
  }
  return m->get<bool>();
}

const json* JsonReader::object(const char* key, bool required) const {
  const json* m = member(key, required);
  if (m && !m->is_object()) {
    issues_.add(path(key), "expected an object");
    return nullptr;
  }
  return m;
}

// ---------------------------------------------------------------------------

json vec_to_json(const Vec3& v, int components) {
  json a = json::array();
  for (int c = 0; c < components; ++c) a.push_back(v[c]);
  return a;
}

Vec3 vec_from_json(const json& j, const std::string& pointer, const Issues& issues) {
  Vec3 v = Vec3::Zero();
  if (!j.is_array() || j.size() < 2 || j.size() > 3) {
    issues.add(pointer, "expected an array of 2 or 3 numbers");
    return v;
  }
  for (std::size_t c = 0; c < j.size(); ++c) {
    if (!j[c].is_number()) {
      issues.add(pointer + "/" + std::to_string(c), "expected a number");
      continue;
    }
    v[static_cast<int>(c)] = j[c].get<double>();
  }
  return v;
}

json to_json(const SurfaceModel& surface) {
  json j{{"kind", std::string(to_string(surface.kind()))}};
  if (surface.kind() == SurfaceKind::FlatTorus) j["periods"] = {surface.periods()[0], surface.periods()[1]};
  return j;
}

SurfaceModel surface_from_json(const json& j, const std::string& pointer, const Issues& issues) {
  JsonReader r(j, pointer, issues);
  const std::string kind = r.string("kind", "FlatTorus");
  try {
    switch (surface_kind_from_string(kind)) {
      case SurfaceKind::Plane: return SurfaceModel::plane();
      case SurfaceKind::Sphere: return SurfaceModel::sphere();
      case SurfaceKind::Hyperboloid: return SurfaceModel::hyperboloid();
      case SurfaceKind::FlatTorus: break;
    }
  } catch (const Error& e) {
    issues.add(r.path("kind"), e.what());
    return SurfaceModel::flat_torus();
  }
  double p0 = kTwoPi, p1 = kTwoPi;
  if (r.has("periods")) {
    const json& p = j.at("periods");
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      issues.add(r.path("periods"), "expected [period_phi, period_z]");
    } else {
      p0 = p[0].get<double>();
      p1 = p[1].get<double>();
    }
  }
  try {
    return SurfaceModel::flat_torus(p0, p1);
  } catch (const Error& e) {
    issues.add(r.path("periods"), e.what());
    return SurfaceModel::flat_torus();
  }
}

json to_json(const MagneticField& field) {
  if (field.kind() == FieldKind::ExactPotential) return {{"kind", "ExactPotential"}, {"epsilon", field.strength()}};
  return {{"kind", "ConstantStrength"}, {"B0", field.strength()}};
}

MagneticField field_from_json(const json& j, const std::string& pointer, const Issues& issues) {
  JsonReader r(j, pointer, issues);
  const std::string kind = r.string("kind", "ConstantStrength");
  FieldKind fk = FieldKind::ConstantStrength;
  try {
    fk = field_kind_from_string(kind);
  } catch (const Error& e) {
    issues.add(r.path("kind"), e.what());
  }
  if (fk == FieldKind::ExactPotential) return MagneticField::exact_torus(r.number("epsilon", 0.0));
  return MagneticField::constant(r.number("B0", 0.0));
}

json to_json(const LoopGenerator& gen) {
  json j{{"kind", std::string(to_string(gen.kind))}};
  switch (gen.kind) {
    case GeneratorKind::FourierMode:
      j["k"] = gen.k;
      j["a"] = gen.a;
      j["b"] = gen.b;
      break;
    case GeneratorKind::TorusGraph: j["mu"] = gen.mu; break;
    case GeneratorKind::SphereLatitude:
    case GeneratorKind::HyperbolicLatitude:
      j["theta0"] = gen.theta0;
      j["rate"] = gen.rate;
      break;
    case GeneratorKind::PlaneCircle:
      j["radius"] = gen.radius;
      j["center"] = vec_to_json(gen.center, 2);
      j["rate"] = gen.rate;
      break;
    case GeneratorKind::ExplicitSamples: {
      json a = json::array();
      for (const auto& p : gen.samples) a.push_back(vec_to_json(p, 3));
      j["samples"] = std::move(a);
      break;
    }
  }
  return j;
}

LoopGenerator generator_from_json(const json& j, const std::string& pointer, const Issues& issues) {
  const auto before = issues.count();
  JsonReader r(j, pointer, issues);
  LoopGenerator g;
  try {
    g.kind = generator_kind_from_string(r.string("kind", "FourierMode"));
  } catch (const Error& e) {
    issues.add(r.path("kind"), e.what());
    return g;
  }
  switch (g.kind) {
    case GeneratorKind::FourierMode: {
      const auto k = r.integer("k", 1);
      if (k == 0 || std::abs(k) > 1000000) issues.add(r.path("k"), "must be a nonzero integer");
      g.k = static_cast<int>(k == 0 || std::abs(k) > 1000000 ? 1 : k);
      g.a = r.number("a", 1.0);
      g.b = r.number("b", 1.0);
      break;
    }
    case GeneratorKind::TorusGraph: g.mu = r.number("mu", 0.0); break;
    case GeneratorKind::SphereLatitude:
    case GeneratorKind::HyperbolicLatitude:
      g.theta0 = r.number("theta0", 0.0);
      g.rate = r.number("rate", 1.0, false);
      break;
    case GeneratorKind::PlaneCircle:
      g.radius = r.number("radius", 1.0);
      if (r.has("center")) g.center = vec_from_json(j.at("center"), r.path("center"), issues);
      g.rate = r.number("rate", 1.0, false);
      break;
    case GeneratorKind::ExplicitSamples: {
      if (!r.has("samples") || !j.at("samples").is_array()) {
        issues.add(r.path("samples"), "expected an array of points");
        break;
      }
      const json& a = j.at("samples");
      for (std::size_t i = 0; i < a.size(); ++i) {
        g.samples.push_back(vec_from_json(a[i], r.path("samples") + "/" + std::to_string(i), issues));
      }
      break;
    }
  }
  if (before == issues.count()) {
    try {
      g.validate();
    } catch (const Error& e) {
      issues.add(pointer, e.what());
    }
  }
  return g;
}

json to_json(const FlowConfig& c) {
  json j{{"dt_policy", c.dt_policy == DtPolicy::FixedCFL ? "FixedCFL" : "Explicit"},
         {"t_max", c.t_max},
         {"tol_residual", c.tol_residual},
         {"tol_point", c.tol_point},
         {"divergence_threshold", c.divergence_threshold},
         {"record_stride", c.record_stride}};
  if (c.dt_policy == DtPolicy::FixedCFL) {
    j["safety"] = c.safety;
  } else {
    j["dt"] = c.dt;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Checkpoints

json checkpoint_to_json(const Checkpoint& cp) {
  const auto& loop = cp.state.loop;
  const int comps = loop.surface().components();
  json samples = json::array();
  for (const auto& p : loop.samples()) samples.push_back(vec_to_json(p, comps));
  return {{"format", kCheckpointFormat},
          {"surface", to_json(loop.surface())},
          {"field", to_json(cp.field)},
          {"n", loop.size()},
          {"circle_length", loop.circle_length()},
          {"closure", vec_to_json(loop.closure(), 2)},
          {"samples", std::move(samples)},
          {"time", cp.state.time},
          {"steps", cp.state.steps},
          {"dissipation", cp.state.dissipation},
          {"flux_term", cp.state.flux_term},
          {"records_written", cp.records_written}};
}

Checkpoint checkpoint_from_json(const json& j) {
  const Issues strict;
  JsonReader r(j, "", strict);
  if (r.string("format", "") != kCheckpointFormat) {
    throw Error("unsupported checkpoint format '" + r.string("format", "") + "'");
  }
  const SurfaceModel surface = surface_from_json(j.at("surface"), "/surface", strict);
  const MagneticField field = field_from_json(j.at("field"), "/field", strict);
  const auto n = r.integer("n", 0);
  const json& a = j.at("samples");
  if (!a.is_array() || static_cast<std::int64_t>(a.size()) != n) throw Error("/samples: expected n points");
  std::vector<Vec3> samples;
  samples.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) samples.push_back(vec_from_json(a[i], "/samples/" + std::to_string(i), strict));
  const Vec3 closure = vec_from_json(j.at("closure"), "/closure", strict);
  FlowState state(DiscreteLoop(surface, std::move(samples), r.number("circle_length", 0.0), closure));
  state.time = r.number("time", 0.0);
  state.dissipation = r.number("dissipation", 0.0);
  state.flux_term = r.number("flux_term", 0.0);
  state.steps = static_cast<std::uint64_t>(r.integer("steps", 0));
  return {std::move(state), field, static_cast<std::uint64_t>(r.integer("records_written", 0))};
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw Error("cannot write " + tmp.string());
    os << checkpoint_to_json(cp).dump(1) << '\n';
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace mgflow
