#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/image.hpp"
#include "forge/png.hpp"
#include "forge/rng.hpp"
#include "forge/sample.hpp"

namespace forge {

/// One labeled UI element inside a window crop, in window-local coordinates.
struct WindowAnnotation {
  std::string instruction;
  NormBox box;
};

/// A pre-rendered application-window crop plus its element annotations.
struct WindowAsset {
  std::string id;
  Image image;
  std::vector<WindowAnnotation> annotations;
};

inline void validate(const WindowAsset& asset) {
  if (asset.id.empty()) throw ValidationError("window asset has empty id");
  if (!asset.image.valid())
    throw ValidationError("window asset '" + asset.id + "': invalid image");
  for (const auto& ann : asset.annotations) {
    if (ann.instruction.empty())
      throw ValidationError("window asset '" + asset.id + "': empty instruction");
    if (!ann.box.valid())
      throw ValidationError("window asset '" + asset.id +
                            "': annotation outside [0,1] or misordered");
  }
}

/// Where one window lands on the background: its [0,1]^2 square maps to
/// [offset, offset + scale] in background-normalized coordinates.
struct Placement {
  std::size_t window_index = 0;
  NormPoint offset;
  double scale = 1.0;
  int z_order = 0;
};

inline NormBox placement_rect(const Placement& p) {
  return {p.offset.x, p.offset.y, p.offset.x + p.scale, p.offset.y + p.scale};
}

/// Fraction of the scaled window lying inside the background frame.
inline double inside_fraction(const Placement& p) {
  if (!(p.scale > 0.0)) throw ValidationError("placement: scale must be positive");
  NormBox unit{0.0, 0.0, 1.0, 1.0};
  return intersection_area(placement_rect(p), unit) / (p.scale * p.scale);
}

inline void validate(const Placement& p) {
  if (inside_fraction(p) < 0.25)
    throw ValidationError("placement: window is less than 25% inside the frame");
}

struct CompositionPlan {
  std::string background_id;
  std::vector<Placement> placements;
  std::uint64_t rng_seed = 0;
};

inline void validate(const CompositionPlan& plan, std::size_t asset_count) {
  std::set<int> zs;
  for (const auto& p : plan.placements) {
    if (p.window_index >= asset_count)
      throw ValidationError("plan: window index " + std::to_string(p.window_index) +
                            " out of range (" + std::to_string(asset_count) + " assets)");
    if (!zs.insert(p.z_order).second)
      throw ValidationError("plan: duplicate z_order " + std::to_string(p.z_order));
    validate(p);
  }
}

/// Maps a window-local box into background-global coordinates: scale, then
/// translate, then clip to the frame and quantize to the 3dp grid.
inline NormBox transform_annotation(const NormBox& local, const Placement& placement,
                                    ImageSize background_size) {
  validate(placement);
  if (!background_size.valid())
    throw ValidationError("transform_annotation: invalid background size");
  const double s = placement.scale;
  NormBox global{local.x0 * s + placement.offset.x, local.y0 * s + placement.offset.y,
                 local.x1 * s + placement.offset.x, local.y1 * s + placement.offset.y};
  NormBox unit{0.0, 0.0, 1.0, 1.0};
  if (intersection_area(global, unit) <= 0.0)
    throw ValidationError("transform_annotation: box lands off-screen on the " +
                          std::to_string(background_size.width) + "x" +
                          std::to_string(background_size.height) + " background");
  NormBox out = quantize(clip_unit(global));
  if (out.x1 <= out.x0 || out.y1 <= out.y0)
    throw ValidationError("transform_annotation: box degenerates after clipping");
  return out;
}

/// Exact fraction of `box` covered by the union of `covers`, by coordinate
/// compression over the axis-aligned rectangles.
inline double covered_fraction(const NormBox& box, const std::vector<NormBox>& covers) {
  double area = box.area();
  if (!(area > 0.0)) throw ValidationError("covered_fraction: zero-area box");
  std::vector<double> xs{box.x0, box.x1};
  std::vector<double> ys{box.y0, box.y1};
  std::vector<NormBox> clipped;
  for (const auto& c : covers) {
    NormBox r{std::max(c.x0, box.x0), std::max(c.y0, box.y0), std::min(c.x1, box.x1),
              std::min(c.y1, box.y1)};
    if (r.x1 <= r.x0 || r.y1 <= r.y0) continue;
    clipped.push_back(r);
    xs.push_back(r.x0);
    xs.push_back(r.x1);
    ys.push_back(r.y0);
    ys.push_back(r.y1);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  double covered = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      double cx = (xs[i] + xs[i + 1]) * 0.5;
      double cy = (ys[j] + ys[j + 1]) * 0.5;
      for (const auto& r : clipped) {
        if (r.x0 <= cx && cx <= r.x1 && r.y0 <= cy && cy <= r.y1) {
          covered += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
          break;
        }
      }
    }
  }
  return covered / area;
}

/// A transformed annotation awaiting occlusion pruning.
struct PlacedAnnotation {
  std::size_t placement_index = 0;
  std::size_t annotation_index = 0;
  NormBox box;
  std::string instruction;
};

/// Keeps an annotation iff less than half of it hides under higher-z windows.
inline std::vector<PlacedAnnotation> occlusion_prune(
    const std::vector<PlacedAnnotation>& annotations,
    const std::vector<Placement>& placements) {
  std::set<int> zs;
  for (const auto& p : placements)
    if (!zs.insert(p.z_order).second)
      throw ValidationError("occlusion_prune: duplicate z_order");
  std::vector<PlacedAnnotation> visible;
  for (const auto& ann : annotations) {
    if (ann.placement_index >= placements.size())
      throw ValidationError("occlusion_prune: placement index out of range");
    int z = placements[ann.placement_index].z_order;
    std::vector<NormBox> covers;
    for (const auto& p : placements)
      if (p.z_order > z) covers.push_back(clip_unit(placement_rect(p)));
    if (covered_fraction(ann.box, covers) < 0.5) visible.push_back(ann);
  }
  return visible;
}

struct CompositionResult {
  Image image;
  std::vector<GroundingSample> samples;
  std::vector<std::string> dropped;   // one reason per discarded annotation
  std::vector<std::string> warnings;  // e.g. empty yield
};

namespace detail {

/// Largest corner displacement, in native window pixels, between the local
/// box and the global box pulled back through the placement.
inline double round_trip_error_px(const NormBox& local, const NormBox& global,
                                  const Placement& p, const Image& window) {
  auto inv_x = [&](double gx) { return (gx - p.offset.x) / p.scale; };
  auto inv_y = [&](double gy) { return (gy - p.offset.y) / p.scale; };
  double ex = std::max(std::abs(inv_x(global.x0) - local.x0),
                       std::abs(inv_x(global.x1) - local.x1)) *
              window.width;
  double ey = std::max(std::abs(inv_y(global.y0) - local.y0),
                       std::abs(inv_y(global.y1) - local.y1)) *
              window.height;
  return std::max(ex, ey);
}

}  // namespace detail

/// Paints the planned windows over the background in ascending z order and
/// emits a point + box sample pair for every annotation that stays on-screen,
/// survives the round-trip fidelity gate, and is not majority-occluded.
inline CompositionResult compose(const std::vector<WindowAsset>& assets,
                                 const Image& background, const CompositionPlan& plan) {
  if (!background.valid()) throw ValidationError("compose: invalid background image");
  if (plan.background_id.empty())
    throw ValidationError("compose: plan has empty background_id");
  validate(plan, assets.size());
  for (const auto& p : plan.placements) validate(assets[p.window_index]);

  CompositionResult result;
  result.image = background;
  const ImageSize bg_size{background.width, background.height};

  std::vector<const Placement*> paint_order;
  for (const auto& p : plan.placements) paint_order.push_back(&p);
  std::sort(paint_order.begin(), paint_order.end(),
            [](const Placement* a, const Placement* b) { return a->z_order < b->z_order; });
  for (const Placement* p : paint_order) {
    const WindowAsset& asset = assets[p->window_index];
    int w = std::max(1, static_cast<int>(std::lround(p->scale * background.width)));
    int h = std::max(1, static_cast<int>(std::lround(p->scale * background.height)));
    Image scaled = resize_bilinear(asset.image, w, h);
    int dx = static_cast<int>(std::lround(p->offset.x * background.width));
    int dy = static_cast<int>(std::lround(p->offset.y * background.height));
    alpha_blit(result.image, scaled, dx, dy);
  }

  std::vector<PlacedAnnotation> placed;
  for (std::size_t pi = 0; pi < plan.placements.size(); ++pi) {
    const Placement& p = plan.placements[pi];
    const WindowAsset& asset = assets[p.window_index];
    for (std::size_t ai = 0; ai < asset.annotations.size(); ++ai) {
      const WindowAnnotation& ann = asset.annotations[ai];
      std::string where =
          asset.id + "[" + std::to_string(ai) + "] via placement " + std::to_string(pi);
      NormBox global;
      try {
        global = transform_annotation(ann.box, p, bg_size);
      } catch (const ValidationError& e) {
        result.dropped.push_back(where + ": " + e.what());
        continue;
      }
      double err = detail::round_trip_error_px(ann.box, global, p, asset.image);
      if (err > 1.0) {
        result.dropped.push_back(where + ": clipping breaks the window-local round trip (" +
                                 std::to_string(err) + " px)");
        continue;
      }
      placed.push_back({pi, ai, global, ann.instruction});
    }
  }

  std::size_t before = placed.size();
  auto visible = occlusion_prune(placed, plan.placements);
  if (visible.size() < before)
    for (std::size_t k = 0; k < before - visible.size(); ++k)
      result.dropped.push_back("majority-occluded annotation pruned");

  const std::string image_ref = plan.background_id + "-synth.png";
  for (const auto& ann : visible) {
    std::string stem = plan.background_id + "-p" + std::to_string(ann.placement_index) +
                       "-a" + std::to_string(ann.annotation_index);
    GroundingSample point;
    point.id = stem + "-point";
    point.image_ref = image_ref;
    point.image_size = bg_size;
    point.instruction = ann.instruction;
    point.task = TaskKind::CenterPointLocalization;
    point.annotation = quantize(ann.box.center());
    point.source = "overlay";
    point.tags = {"synthetic/overlay"};
    validate(point);
    result.samples.push_back(std::move(point));

    GroundingSample box;
    box.id = stem + "-box";
    box.image_ref = image_ref;
    box.image_size = bg_size;
    box.instruction = ann.instruction;
    box.task = TaskKind::BoxPrediction;
    box.annotation = ann.box;
    box.source = "overlay";
    box.tags = {"synthetic/overlay"};
    validate(box);
    result.samples.push_back(std::move(box));
  }
  if (result.samples.empty())
    result.warnings.push_back("empty yield: no annotation survived composition '" +
                              plan.background_id + "'");
  return result;
}

struct PlanConfig {
  double scale_min = 0.4;
  double scale_max = 0.75;
  int max_retries = 100;

  void validate() const {
    if (!(scale_min > 0.0 && scale_min <= scale_max))
      throw ValidationError("plan: need 0 < scale_min <= scale_max");
    if (max_retries < 1) throw ValidationError("plan: max_retries must be >= 1");
  }
};

/// Draws k distinct windows and seeks placements satisfying the 25%-inside
/// rule, rejection-sampling each one up to max_retries times.
inline CompositionPlan plan_random(const std::vector<WindowAsset>& assets,
                                   ImageSize background_size, int k_windows,
                                   std::uint64_t seed, const PlanConfig& cfg = {}) {
  cfg.validate();
  if (!background_size.valid())
    throw ValidationError("plan_random: invalid background size");
  if (k_windows < 0 || static_cast<std::size_t>(k_windows) > assets.size())
    throw ValidationError("plan_random: k_windows must be between 0 and the asset count");
  CompositionPlan plan;
  plan.rng_seed = seed;
  Rng rng(seed);
  std::vector<std::size_t> indices(assets.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  for (int i = 0; i < k_windows; ++i) {
    auto j = static_cast<std::size_t>(
        rng.uniform_int(i, static_cast<std::int64_t>(indices.size()) - 1));
    std::swap(indices[static_cast<std::size_t>(i)], indices[j]);
    Placement p;
    p.window_index = indices[static_cast<std::size_t>(i)];
    p.z_order = i;
    bool ok = false;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
      p.scale = rng.uniform(cfg.scale_min, cfg.scale_max);
      p.offset.x = rng.uniform(-0.75 * p.scale, 1.0 - 0.25 * p.scale);
      p.offset.y = rng.uniform(-0.75 * p.scale, 1.0 - 0.25 * p.scale);
      if (inside_fraction(p) >= 0.25) {
        ok = true;
        break;
      }
    }
    if (!ok)
      throw PlanningError("plan_random: no placement satisfied the 25%-inside rule in " +
                          std::to_string(cfg.max_retries) + " attempts");
    plan.placements.push_back(p);
  }
  return plan;
}

inline WindowAsset load_window_asset(const std::filesystem::path& dir) {
  WindowAsset asset;
  asset.id = dir.filename().string();
  asset.image = read_png(dir / "image.png");
  std::filesystem::path ann_path = dir / "annotations.json";
  std::ifstream in(ann_path, std::ios::binary);
  if (!in) throw IoError("asset: cannot open '" + ann_path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("asset: bad JSON in '" + ann_path.string() + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("annotations") || !doc["annotations"].is_array())
    throw ParseError("asset: '" + ann_path.string() +
                     "' must be an object with an 'annotations' array");
  for (const auto& item : doc["annotations"]) {
    if (!item.is_object() || !item.contains("instruction") || !item.contains("box") ||
        !item["box"].is_array() || item["box"].size() != 4)
      throw ParseError("asset: each annotation needs 'instruction' and a 4-number 'box'");
    WindowAnnotation ann;
    ann.instruction = item["instruction"].get<std::string>();
    ann.box = {item["box"][0].get<double>(), item["box"][1].get<double>(),
               item["box"][2].get<double>(), item["box"][3].get<double>()};
    asset.annotations.push_back(std::move(ann));
  }
  validate(asset);
  return asset;
}

inline void save_window_asset(const WindowAsset& asset, const std::filesystem::path& dir) {
  validate(asset);
  std::filesystem::create_directories(dir);
  write_png(asset.image, dir / "image.png");
  nlohmann::json anns = nlohmann::json::array();
  for (const auto& ann : asset.annotations) {
    anns.push_back({{"instruction", ann.instruction},
                    {"box", {ann.box.x0, ann.box.y0, ann.box.x1, ann.box.y1}}});
  }
  nlohmann::json doc{{"annotations", anns}};
  std::ofstream out(dir / "annotations.json", std::ios::binary);
  if (!out) throw IoError("asset: cannot write '" + (dir / "annotations.json").string() + "'");
  out << doc.dump(2) << "\n";
}

/// Loads every subdirectory holding an image.png, sorted by name.
inline std::vector<WindowAsset> load_assets_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("asset: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "image.png"))
      subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<WindowAsset> assets;
  for (const auto& sub : subdirs) assets.push_back(load_window_asset(sub));
  return assets;
}

struct BackgroundAsset {
  std::string id;
  Image image;
};

/// Loads every *.png in the directory as a background, sorted by name.
inline std::vector<BackgroundAsset> load_backgrounds_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("background: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<BackgroundAsset> backgrounds;
  for (const auto& f : files)
    backgrounds.push_back({f.stem().string(), read_png(f)});
  return backgrounds;
}

}  // namespace forge
