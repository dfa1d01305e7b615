#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/parallel.hpp"
#include "forge/sample.hpp"

namespace forge {

/// Detected UI-element boxes for one screenshot, from an external detector.
struct DetectionSet {
  std::string image_id;
  std::vector<NormBox> boxes;
  std::string detector;
};

struct FilterConfig {
  double tau = 0.5;      // keep iff coverage score >= tau
  double side_l = 0.04;  // point-expansion square side, fraction of min(W,H)

  void validate() const {
    if (!(tau >= 0.0 && tau <= 1.0))
      throw ValidationError("filter: tau must be in [0,1], got " + std::to_string(tau));
    if (!(side_l > 0.0 && side_l <= 1.0))
      throw ValidationError("filter: side_l must be in (0,1], got " + std::to_string(side_l));
  }
};

/// Expands a point annotation into the square ground-truth box used by the
/// coverage test. The square has sides of side_l * min(width, height) pixels
/// so it is visually square on non-square screens, then converts back to
/// normalized units and clips at the screen edges.
inline NormBox expand_point_to_box(NormPoint p, double side_l, ImageSize size) {
  if (!size.valid()) throw ValidationError("expand_point_to_box: invalid image size");
  double side_px = side_l * std::min(size.width, size.height);
  double hx = side_px / (2.0 * size.width);
  double hy = side_px / (2.0 * size.height);
  return clip_unit({p.x - hx, p.y - hy, p.x + hx, p.y + hy});
}

/// Coverage score: the detections' intersections with the ground-truth box,
/// summed independently and divided by the ground-truth area. Overlapping
/// detections can push the score above 1; it is deliberately not clamped,
/// which cannot change any threshold test at tau <= 1.
inline double coverage_score(const NormBox& gt, const DetectionSet& dets) {
  double gt_area = gt.area();
  if (gt_area <= 0.0)
    throw ValidationError("coverage_score: degenerate ground-truth box has zero area");
  double covered = 0.0;
  for (const auto& det : dets.boxes) covered += intersection_area(gt, det);
  return covered / gt_area;
}

/// The ground-truth box screened by the filter: the annotation itself for box
/// tasks, the expanded square for point tasks.
inline NormBox ground_truth_box(const GroundingSample& s, const FilterConfig& cfg) {
  if (s.task == TaskKind::BoxPrediction) return std::get<NormBox>(s.annotation);
  return expand_point_to_box(std::get<NormPoint>(s.annotation), cfg.side_l, s.image_size);
}

/// The key a sample uses to look up its DetectionSet: the image filename
/// without directories or extension, or the sample id when no image is set.
inline std::string image_id_of(const GroundingSample& s) {
  if (s.image_ref.empty()) return s.id;
  return std::filesystem::path(s.image_ref).stem().string();
}

struct FilterResult {
  DatasetManifest kept;     // tagged "filtered"
  DatasetManifest dropped;  // tagged "coverage:<score>" or "degenerate"
  DatasetManifest missing;  // tagged "missing-detections"
};

namespace detail {

inline std::string coverage_tag(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "coverage:%.6f", score);
  return buf;
}

}  // namespace detail

/// Partitions a manifest by the coverage test: a sample is kept iff the
/// coverage score of its ground-truth box is >= tau. Samples whose image has
/// no DetectionSet are routed to a separate bucket, never silently kept.
/// Every input sample lands in exactly one of the three outputs, in order.
inline FilterResult filter_dataset(const DatasetManifest& manifest,
                                   const std::map<std::string, DetectionSet>& detections,
                                   const FilterConfig& cfg, unsigned workers = 0) {
  cfg.validate();
  enum class Fate { Kept, Dropped, Missing };
  struct Decision {
    Fate fate = Fate::Missing;
    std::string tag;
  };
  auto decide = [&](const GroundingSample& s) -> Decision {
    auto it = detections.find(image_id_of(s));
    if (it == detections.end()) return {Fate::Missing, "missing-detections"};
    NormBox gt = ground_truth_box(s, cfg);
    if (gt.area() <= 0.0) return {Fate::Dropped, "degenerate"};
    double score = coverage_score(gt, it->second);
    if (score >= cfg.tau) return {Fate::Kept, "filtered"};
    return {Fate::Dropped, detail::coverage_tag(score)};
  };
  auto decisions = parallel_map(manifest.samples, decide, workers);

  FilterResult result;
  for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
    GroundingSample s = manifest.samples[i];
    s.tags.insert(decisions[i].tag);
    switch (decisions[i].fate) {
      case Fate::Kept: result.kept.samples.push_back(std::move(s)); break;
      case Fate::Dropped: result.dropped.samples.push_back(std::move(s)); break;
      case Fate::Missing: result.missing.samples.push_back(std::move(s)); break;
    }
  }
  return result;
}

inline DetectionSet detection_set_from_json(const nlohmann::json& j) {
  try {
    DetectionSet d;
    d.image_id = j.at("image_id").get<std::string>();
    d.detector = j.value("detector", std::string{});
    for (const auto& row : j.at("boxes")) {
      if (!row.is_array() || row.size() != 4)
        throw ValidationError("detection box must have 4 coordinates");
      NormBox b{row[0].get<double>(), row[1].get<double>(), row[2].get<double>(),
                row[3].get<double>()};
      if (!b.valid())
        throw ValidationError("detection box outside [0,1] or misordered in '" + d.image_id +
                              "'");
      d.boxes.push_back(b);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("detection file: ") + e.what());
  }
}

inline nlohmann::json detection_set_to_json(const DetectionSet& d) {
  nlohmann::json j;
  j["image_id"] = d.image_id;
  j["detector"] = d.detector;
  j["boxes"] = nlohmann::json::array();
  for (const auto& b : d.boxes) j["boxes"].push_back({b.x0, b.y0, b.x1, b.y1});
  return j;
}

inline DetectionSet read_detection_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open detection file '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("detection file '" + path.string() + "': " + e.what());
  }
  return detection_set_from_json(j);
}

inline void write_detection_file(const DetectionSet& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << detection_set_to_json(d).dump() << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Loads every *.json file in a directory, keyed by each file's image_id.
inline std::map<std::string, DetectionSet> load_detections_dir(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("detections directory '" + dir.string() + "' does not exist");
  std::map<std::string, DetectionSet> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    DetectionSet d = read_detection_file(entry.path());
    std::string image_id = d.image_id;
    if (!out.emplace(image_id, std::move(d)).second)
      throw ValidationError("duplicate detections for image '" + image_id + "'");
  }
  return out;
}

}  // namespace forge
