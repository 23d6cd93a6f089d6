#pragma once

// JSON encoding of the model types and the checkpoint file.

#include "mgflow/flow.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mgflow {

using json = nlohmann::json;

inline constexpr const char* kCheckpointFormat = "mgflow-checkpoint/1";

json to_json(const SurfaceModel& surface);
json to_json(const MagneticField& field);
json to_json(const LoopGenerator& gen);
json to_json(const FlowConfig& config);
json vec_to_json(const Vec3& v, int components);

/// Collects problems as "/json/pointer: message". Without a sink the first problem throws.
class Issues {
 public:
  explicit Issues(std::vector<std::string>* sink = nullptr) : sink_(sink) {}
  void add(const std::string& pointer, const std::string& message) const;
  std::size_t count() const { return sink_ ? sink_->size() : 0; }

 private:
  std::vector<std::string>* sink_;
};

/// Typed member access with pointer-style paths in the messages.
class JsonReader {
 public:
  JsonReader(const json& j, std::string pointer, const Issues& issues);

  bool ok() const { return ok_; }
  bool has(const char* key) const;
  double number(const char* key, double fallback, bool required = true) const;
  std::int64_t integer(const char* key, std::int64_t fallback, bool required = true) const;
  std::string string(const char* key, const std::string& fallback, bool required = true) const;
  bool boolean(const char* key, bool fallback, bool required = true) const;
  const json* object(const char* key, bool required = true) const;
  std::string path(const char* key) const { return pointer_ + "/" + key; }
  const Issues& issues() const { return issues_; }

 private:
  const json* member(const char* key, bool required) const;

  const json& j_;
  std::string pointer_;
  const Issues& issues_;
  bool ok_ = true;
};

// Decoders. With the default Issues the first problem throws Error.
SurfaceModel surface_from_json(const json& j, const std::string& pointer = "", const Issues& issues = Issues());
MagneticField field_from_json(const json& j, const std::string& pointer = "", const Issues& issues = Issues());
LoopGenerator generator_from_json(const json& j, const std::string& pointer = "", const Issues& issues = Issues());
Vec3 vec_from_json(const json& j, const std::string& pointer = "", const Issues& issues = Issues());

struct Checkpoint {
  FlowState state;
  MagneticField field;
  std::uint64_t records_written = 0;  ///< diagnostics rows on disk when the checkpoint was taken
};

json checkpoint_to_json(const Checkpoint& cp);
Checkpoint checkpoint_from_json(const json& j);

/// Writes via a temporary file and rename so a crash never leaves a torn checkpoint.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mgflow
