// Walks a small in-memory dataset through the curation pipeline: coverage
// filtering against element detections, layout-entropy scoring, difficulty
// bucketing, and the resolution cap. Run it to see which samples survive and
// why the survivors land in the buckets they do.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "forge/forge.hpp"

using namespace forge;

namespace {

GroundingSample box_sample(const std::string& id, const std::string& image, ImageSize size,
                           const std::string& instruction, NormBox box) {
  GroundingSample s;
  s.id = id;
  s.image_ref = image;
  s.image_size = size;
  s.instruction = instruction;
  s.task = TaskKind::BoxPrediction;
  s.annotation = box;
  s.source = "demo";
  return s;
}

GroundingSample point_sample(const std::string& id, const std::string& image, ImageSize size,
                             const std::string& instruction, NormPoint p) {
  GroundingSample s = box_sample(id, image, size, instruction, {0, 0, 1, 1});
  s.task = TaskKind::CenterPointLocalization;
  s.annotation = p;
  return s;
}

}  // namespace

int main() {
  ImageSize hd{1920, 1080};

  // Three screens: a dense grid of tiles, a sparse toolbar, and one screen
  // the detector never saw.
  DatasetManifest manifest;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) {
      double x = 0.1 + 0.3 * col, y = 0.15 + 0.3 * row;
      manifest.samples.push_back(box_sample(
          "grid-r" + std::to_string(row) + "c" + std::to_string(col), "grid.png", hd,
          "open tile " + std::to_string(3 * row + col), {x, y, x + 0.2, y + 0.2}));
    }
  manifest.samples.push_back(
      box_sample("bar-save", "toolbar.png", hd, "save the document", {0.02, 0.02, 0.10, 0.08}));
  manifest.samples.push_back(
      box_sample("bar-undo", "toolbar.png", hd, "undo the last edit", {0.12, 0.02, 0.20, 0.08}));
  manifest.samples.push_back(
      point_sample("bar-menu", "toolbar.png", hd, "open the overflow menu", {0.95, 0.05}));
  manifest.samples.push_back(
      box_sample("lost-ok", "unscanned.png", hd, "confirm the dialog", {0.4, 0.6, 0.6, 0.7}));

  // Detections: the grid detector found every tile, the toolbar detector
  // missed the undo button, and unscanned.png has no detection file at all.
  std::map<std::string, DetectionSet> detections;
  DetectionSet grid{"grid", {}, "demo-detector"};
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) {
      double x = 0.1 + 0.3 * col, y = 0.15 + 0.3 * row;
      grid.boxes.push_back({x, y, x + 0.2, y + 0.2});
    }
  detections["grid"] = grid;
  detections["toolbar"] =
      DetectionSet{"toolbar", {{0.02, 0.02, 0.10, 0.08}, {0.93, 0.02, 0.99, 0.09}}, "demo-detector"};

  std::printf("== coverage filter (tau = 0.5) ==\n");
  FilterConfig fcfg;
  auto filtered = filter_dataset(manifest, detections, fcfg);
  std::printf("kept %zu, dropped %zu, missing detections %zu\n", filtered.kept.size(),
              filtered.dropped.size(), filtered.missing.size());
  for (const auto& s : filtered.dropped.samples)
    for (const auto& tag : s.tags) std::printf("  dropped %-10s %s\n", s.id.c_str(), tag.c_str());
  for (const auto& s : filtered.missing.samples) std::printf("  no detections for %s\n", s.id.c_str());

  std::printf("\n== layout entropy and difficulty buckets ==\n");
  EntropyConfig ecfg;
  std::vector<EntropyReport> reports;
  for (const auto& [image_id, dets] : detections) {
    auto centers = centers_from_detections(dets);
    reports.push_back(layout_entropy(centers, image_id, hd, ecfg));
  }
  reports = bucket_dataset(std::move(reports), BucketQuantiles{});
  std::printf("%-10s %3s %8s %8s %8s  %s\n", "image", "n", "h1d", "h2d", "E", "bucket");
  for (const auto& r : reports)
    std::printf("%-10s %3zu %8.4f %8.4f %8.4f  %s\n", r.image_id.c_str(), r.n, r.h1d_avg, r.h2d,
                r.e_layout, r.bucket ? bucket_name(*r.bucket) : "-");

  std::printf("\n== resolution cap (train mode, 3072x3072) ==\n");
  GroundingSample huge = box_sample("retina-close", "retina.png", {5120, 2880},
                                    "close the window", {0.96, 0.01, 0.99, 0.04});
  GroundingSample capped = apply_policy(huge, ResizeMode::Train, ResolutionPolicy{});
  std::printf("%dx%d -> %dx%d", huge.image_size.width, huge.image_size.height,
              capped.image_size.width, capped.image_size.height);
  for (const auto& tag : capped.tags) std::printf("  [%s]", tag.c_str());
  std::printf("\nannotation before: %s\n", to_jsonl(huge).c_str());
  std::printf("annotation after:  %s\n", to_jsonl(capped).c_str());
  return 0;
}
