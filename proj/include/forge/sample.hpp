#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <variant>
#include <vector>

#include "forge/error.hpp"
#include "forge/geometry.hpp"

namespace forge {

/// The two canonical grounding task formulations.
enum class TaskKind { BoxPrediction, CenterPointLocalization };

inline const char* to_string(TaskKind k) {
  return k == TaskKind::BoxPrediction ? "box" : "point";
}

inline TaskKind task_from_string(const std::string& s) {
  if (s == "box") return TaskKind::BoxPrediction;
  if (s == "point") return TaskKind::CenterPointLocalization;
  throw ValidationError("unknown task kind '" + s + "' (expected \"box\" or \"point\")");
}

using Annotation = std::variant<NormPoint, NormBox>;

/// One unified training record: an image, an instruction, and a normalized
/// annotation whose shape matches the task kind.
struct GroundingSample {
  std::string id;
  std::string image_ref;   // opaque to this module; usually a file path
  ImageSize image_size;
  std::string instruction;
  TaskKind task = TaskKind::CenterPointLocalization;
  Annotation annotation;
  std::string source;
  std::set<std::string> tags;  // pipeline stage markers

  bool has_tag(const std::string& t) const { return tags.count(t) != 0; }
};

/// Throws ValidationError if the sample breaks a schema invariant.
inline void validate(const GroundingSample& s) {
  if (s.id.empty()) throw ValidationError("sample has empty id");
  if (!s.image_size.valid())
    throw ValidationError("sample '" + s.id + "': image size must be >= 1x1");
  if (s.task == TaskKind::BoxPrediction) {
    if (!std::holds_alternative<NormBox>(s.annotation))
      throw ValidationError("sample '" + s.id + "': box task requires a 4-value annotation");
    if (!std::get<NormBox>(s.annotation).valid())
      throw ValidationError("sample '" + s.id + "': box annotation outside [0,1] or misordered");
  } else {
    if (!std::holds_alternative<NormPoint>(s.annotation))
      throw ValidationError("sample '" + s.id + "': point task requires a 2-value annotation");
    if (!std::get<NormPoint>(s.annotation).valid())
      throw ValidationError("sample '" + s.id + "': point annotation outside [0,1]");
  }
}

/// Center of the annotation: the point itself, or the box center.
inline NormPoint annotation_center(const GroundingSample& s) {
  if (std::holds_alternative<NormPoint>(s.annotation)) return std::get<NormPoint>(s.annotation);
  return std::get<NormBox>(s.annotation).center();
}

struct ManifestStats {
  std::map<std::string, std::size_t> per_source;
  std::map<std::string, std::size_t> per_task;
  std::map<std::string, std::size_t> per_bucket;  // from "bucket:<name>" tags
  std::size_t total = 0;
};

/// Ordered collection of samples with unique ids.
struct DatasetManifest {
  std::vector<GroundingSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  void validate_ids() const {
    std::unordered_set<std::string> seen;
    for (const auto& s : samples)
      if (!seen.insert(s.id).second)
        throw ValidationError("duplicate sample id '" + s.id + "' in manifest");
  }

  ManifestStats stats() const {
    ManifestStats st;
    st.total = samples.size();
    for (const auto& s : samples) {
      ++st.per_source[s.source];
      ++st.per_task[to_string(s.task)];
      for (const auto& t : s.tags)
        if (t.rfind("bucket:", 0) == 0) ++st.per_bucket[t.substr(7)];
    }
    return st;
  }
};

}  // namespace forge
