#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "forge/config.hpp"
#include "forge/entropy.hpp"
#include "forge/error.hpp"
#include "forge/eval.hpp"
#include "forge/filter.hpp"
#include "forge/ingest.hpp"
#include "forge/log.hpp"
#include "forge/manifest_io.hpp"
#include "forge/overlay.hpp"
#include "forge/parallel.hpp"
#include "forge/png.hpp"
#include "forge/resolution.hpp"
#include "forge/simulate.hpp"

namespace forge {

/// Writes through a temp file in the same directory and renames it over the
/// target, so a failure mid-write never leaves a truncated artifact and
/// earlier outputs stay intact.
inline void atomic_write(const std::filesystem::path& path,
                         const std::function<void(std::ostream&)>& writer) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw IoError("write failure on '" + tmp.string() + "'");
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    fs::remove(tmp, ec2);
    throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() +
                  "': " + ec.message());
  }
}

/// Turns the manifest's box samples into reward targets for the training
/// simulator. Difficulty comes from the `bucket:` tag when present.
inline std::vector<SimTask> tasks_from_manifest(const DatasetManifest& m) {
  std::vector<SimTask> tasks;
  for (const auto& s : m.samples) {
    if (s.task != TaskKind::BoxPrediction) continue;
    SimTask t;
    t.task_id = s.id;
    t.target = std::get<NormBox>(s.annotation);
    t.difficulty = Bucket::Easy;
    for (const auto& tag : s.tags)
      if (tag.rfind("bucket:", 0) == 0) t.difficulty = bucket_from_string(tag.substr(7));
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw ValidationError("rl-sim: manifest has no box samples");
  return tasks;
}

/// Task source for the simulator CLI: either `synthetic:<n>` or a manifest
/// path.
inline std::vector<SimTask> resolve_sim_tasks(const std::string& spec, std::uint64_t seed) {
  constexpr const char kPrefix[] = "synthetic:";
  if (spec.rfind(kPrefix, 0) == 0) {
    std::string tail = spec.substr(sizeof(kPrefix) - 1);
    int n = 0;
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), n);
    if (ec != std::errc{} || ptr != tail.data() + tail.size())
      throw ValidationError("rl-sim: bad task count in '" + spec + "'");
    return make_synthetic_tasks(n, seed);
  }
  return tasks_from_manifest(read_manifest(std::filesystem::path(spec)));
}

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

struct HistogramBin {
  std::string label;
  std::size_t count = 0;
};

struct StatsSummary {
  ManifestStats base;
  std::vector<HistogramBin> aspect_ratio;
  std::vector<HistogramBin> total_pixels;
};

namespace detail {

/// Lower-inclusive binning: bin i covers [edges[i-1], edges[i]).
inline std::size_t bin_index(double value, const std::vector<double>& edges) {
  std::size_t i = 0;
  while (i < edges.size() && value >= edges[i]) ++i;
  return i;
}

}  // namespace detail

/// Counts per source/task/bucket plus shape histograms over aspect ratio
/// (width/height) and total pixel count. Bin labels are fixed so an empty
/// manifest reports every bin with a zero count.
inline StatsSummary summarize(const DatasetManifest& m) {
  static const std::vector<double> aspect_edges = {0.5, 0.75, 1.0, 1.5, 2.0};
  static const std::vector<std::string> aspect_labels = {"<0.5",  "0.5-0.75", "0.75-1",
                                                         "1-1.5", "1.5-2",    ">=2"};
  static const std::vector<double> pixel_edges = {250e3, 500e3, 1e6, 2e6, 4e6, 8e6};
  static const std::vector<std::string> pixel_labels = {
      "<0.25MP", "0.25-0.5MP", "0.5-1MP", "1-2MP", "2-4MP", "4-8MP", ">=8MP"};

  StatsSummary s;
  s.base = m.stats();
  for (const auto& label : aspect_labels) s.aspect_ratio.push_back({label, 0});
  for (const auto& label : pixel_labels) s.total_pixels.push_back({label, 0});
  for (const auto& sample : m.samples) {
    double ratio = static_cast<double>(sample.image_size.width) /
                   static_cast<double>(sample.image_size.height);
    double pixels = static_cast<double>(sample.image_size.width) *
                    static_cast<double>(sample.image_size.height);
    ++s.aspect_ratio[detail::bin_index(ratio, aspect_edges)].count;
    ++s.total_pixels[detail::bin_index(pixels, pixel_edges)].count;
  }
  return s;
}

inline nlohmann::json stats_to_json(const StatsSummary& s) {
  nlohmann::json j;
  j["total"] = s.base.total;
  j["per_source"] = nlohmann::json::object();
  for (const auto& [name, count] : s.base.per_source) {
    double share = s.base.total == 0
                       ? 0.0
                       : (100.0 * static_cast<double>(count)) / static_cast<double>(s.base.total);
    j["per_source"][name] = {{"count", count}, {"share_pct", share}};
  }
  j["per_task"] = s.base.per_task;
  j["per_bucket"] = s.base.per_bucket;
  auto bins = [](const std::vector<HistogramBin>& hist) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : hist) arr.push_back({{"bin", b.label}, {"count", b.count}});
    return arr;
  };
  j["aspect_ratio"] = bins(s.aspect_ratio);
  j["total_pixels"] = bins(s.total_pixels);
  return j;
}

// ---------------------------------------------------------------------------
// Stage cores shared by the pipeline and the standalone subcommands
// ---------------------------------------------------------------------------

struct EntropyOutcome {
  std::vector<EntropyReport> reports;  // one per image, input order
  DatasetManifest tagged;              // input samples with bucket: tags added
};

/// Groups samples by image, scores each image's layout, buckets the scores,
/// and tags every sample with its image's bucket. Centers come from the
/// elements map when it has the image, otherwise from the annotations.
inline EntropyOutcome entropy_over_manifest(const DatasetManifest& manifest,
                                            const std::map<std::string, DetectionSet>& elements,
                                            const EntropyConfig& cfg,
                                            const BucketQuantiles& quantiles) {
  if (manifest.empty()) throw ValidationError("entropy: manifest is empty");

  std::vector<std::string> image_order;
  std::map<std::string, std::vector<const GroundingSample*>> groups;
  for (const auto& s : manifest.samples) {
    auto [it, fresh] = groups.try_emplace(image_id_of(s));
    if (fresh) image_order.push_back(it->first);
    it->second.push_back(&s);
  }

  EntropyOutcome outcome;
  outcome.reports.reserve(image_order.size());
  for (const auto& image_id : image_order) {
    const auto& samples = groups[image_id];
    std::vector<NormPoint> centers;
    if (auto it = elements.find(image_id); it != elements.end()) {
      centers = centers_from_detections(it->second);
    } else {
      for (const auto* s : samples) centers.push_back(annotation_center(*s));
    }
    outcome.reports.push_back(
        layout_entropy(centers, image_id, samples.front()->image_size, cfg));
  }
  outcome.reports = bucket_dataset(std::move(outcome.reports), quantiles);

  std::map<std::string, Bucket> bucket_of;
  for (const auto& r : outcome.reports) bucket_of[r.image_id] = *r.bucket;
  outcome.tagged = manifest;
  for (auto& s : outcome.tagged.samples)
    s.tags.insert(std::string("bucket:") + bucket_name(bucket_of.at(image_id_of(s))));
  return outcome;
}

struct SynthOutcome {
  DatasetManifest manifest;
  std::size_t compositions = 0;
  std::size_t dropped = 0;
};

/// Plans and renders `cfg.count` seeded compositions, cycling through the
/// backgrounds, writing each PNG into `png_dir` under the name its manifest
/// lines reference.
inline SynthOutcome synthesize_dataset(const SynthConfig& cfg, std::uint64_t seed,
                                       const std::filesystem::path& png_dir) {
  auto assets = load_assets_dir(cfg.assets_dir);
  auto backgrounds = load_backgrounds_dir(cfg.backgrounds_dir);
  if (assets.empty())
    throw ValidationError("synth: no window assets in '" + cfg.assets_dir.string() + "'");
  if (backgrounds.empty())
    throw ValidationError("synth: no backgrounds in '" + cfg.backgrounds_dir.string() + "'");

  SynthOutcome outcome;
  for (int i = 0; i < cfg.count; ++i) {
    const BackgroundAsset& bg = backgrounds[static_cast<std::size_t>(i) % backgrounds.size()];
    ImageSize size{bg.image.width, bg.image.height};
    std::uint64_t plan_seed = seed + static_cast<std::uint64_t>(i) * 0x9e3779b97f4a7c15ull;
    CompositionPlan plan = plan_random(assets, size, cfg.k_windows, plan_seed, cfg.plan);
    plan.background_id = bg.id + "-c" + std::to_string(i);
    CompositionResult result = compose(assets, bg.image, plan);
    atomic_write(png_dir / (plan.background_id + "-synth.png"),
                 [&](std::ostream& out) { write_png(result.image, out); });
    for (auto& s : result.samples) outcome.manifest.samples.push_back(std::move(s));
    outcome.dropped += result.dropped.size();
    ++outcome.compositions;
  }
  outcome.manifest.validate_ids();
  return outcome;
}

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

struct StageReport {
  std::string stage;
  std::vector<std::pair<std::string, std::size_t>> counts;
};

struct PipelineReport {
  std::vector<StageReport> stages;
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"ingest", "filter", "entropy", "synth",
                                                 "resize", "rl-sim", "eval"};
  return names;
}

namespace detail {

/// Maps each intermediate artifact to the stage that writes it.
inline const std::map<std::string, std::string>& artifact_producers() {
  static const std::map<std::string, std::string> producers = {
      {"ingest.jsonl", "ingest"},           {"ingest-rejections.jsonl", "ingest"},
      {"filtered.jsonl", "filter"},         {"filter-dropped.jsonl", "filter"},
      {"bucketed.jsonl", "entropy"},        {"entropy-reports.jsonl", "entropy"},
      {"synth.jsonl", "synth"},             {"resized.jsonl", "resize"},
      {"rl-log.csv", "rl-sim"},             {"eval-report.txt", "eval"},
      {"eval-report.csv", "eval"},
  };
  return producers;
}

inline std::filesystem::path require_artifact(const std::filesystem::path& work,
                                              const std::string& stage,
                                              const std::string& artifact) {
  std::filesystem::path p = work / artifact;
  if (!std::filesystem::exists(p))
    throw DependencyError("stage '" + stage + "' needs '" + artifact + "', which stage '" +
                          artifact_producers().at(artifact) + "' produces; run that stage first");
  return p;
}

inline void require_external(const std::string& stage, const std::string& key,
                             const std::filesystem::path& path, bool want_dir) {
  if (path.empty())
    throw DependencyError("stage '" + stage + "' needs config key '" + key + "'");
  bool ok = want_dir ? std::filesystem::is_directory(path) : std::filesystem::exists(path);
  if (!ok)
    throw DependencyError("stage '" + stage + "': " + key + " path '" + path.string() +
                          "' not found");
}

inline StageReport run_ingest(const PipelineConfig& cfg) {
  require_external("ingest", "ingest.input", cfg.ingest_input, false);
  const FormatAdapter& adapter = find_adapter(cfg.ingest_adapter);
  std::ifstream in(cfg.ingest_input);
  if (!in) throw IoError("cannot open '" + cfg.ingest_input.string() + "'");
  IngestResult result = ingest_dataset(adapter, in, cfg.worker_count);
  atomic_write(cfg.work_dir / "ingest.jsonl",
               [&](std::ostream& out) { write_manifest(result.manifest, out); });
  atomic_write(cfg.work_dir / "ingest-rejections.jsonl",
               [&](std::ostream& out) { write_rejections(result.rejections, out); });
  return {"ingest",
          {{"records", result.input_records},
           {"samples", result.manifest.size()},
           {"rejections", result.rejections.size()}}};
}

inline StageReport run_filter(const PipelineConfig& cfg) {
  DatasetManifest manifest = read_manifest(require_artifact(cfg.work_dir, "filter", "ingest.jsonl"));
  require_external("filter", "filter.detections_dir", cfg.detections_dir, true);
  auto detections = load_detections_dir(cfg.detections_dir);
  FilterResult result = filter_dataset(manifest, detections, cfg.filter, cfg.worker_count);
  atomic_write(cfg.work_dir / "filtered.jsonl",
               [&](std::ostream& out) { write_manifest(result.kept, out); });
  atomic_write(cfg.work_dir / "filter-dropped.jsonl", [&](std::ostream& out) {
    write_manifest(result.dropped, out);
    write_manifest(result.missing, out);
  });
  return {"filter",
          {{"input", manifest.size()},
           {"kept", result.kept.size()},
           {"dropped", result.dropped.size()},
           {"missing", result.missing.size()}}};
}

inline StageReport run_entropy(const PipelineConfig& cfg) {
  DatasetManifest manifest =
      read_manifest(require_artifact(cfg.work_dir, "entropy", "filtered.jsonl"));

  std::map<std::string, DetectionSet> elements;
  if (!cfg.elements_dir.empty()) {
    require_external("entropy", "entropy.elements_dir", cfg.elements_dir, true);
    elements = load_detections_dir(cfg.elements_dir);
  }

  EntropyOutcome outcome = entropy_over_manifest(manifest, elements, cfg.entropy, cfg.quantiles);

  StageReport report{"entropy",
                     {{"images", outcome.reports.size()}, {"easy", 0}, {"medium", 0},
                      {"hard", 0}}};
  for (const auto& r : outcome.reports) {
    const char* name = bucket_name(*r.bucket);
    for (auto& [key, count] : report.counts)
      if (key == name) ++count;
  }

  atomic_write(cfg.work_dir / "bucketed.jsonl",
               [&](std::ostream& out) { write_manifest(outcome.tagged, out); });
  atomic_write(cfg.work_dir / "entropy-reports.jsonl", [&](std::ostream& out) {
    for (const auto& r : outcome.reports) out << report_to_json(r).dump() << '\n';
  });
  report.counts.emplace_back("samples", outcome.tagged.size());
  return report;
}

inline StageReport run_synth(const PipelineConfig& cfg) {
  require_external("synth", "synth.assets_dir", cfg.synth.assets_dir, true);
  require_external("synth", "synth.backgrounds_dir", cfg.synth.backgrounds_dir, true);
  SynthOutcome outcome = synthesize_dataset(cfg.synth, cfg.seed, cfg.work_dir / "synth");
  atomic_write(cfg.work_dir / "synth.jsonl",
               [&](std::ostream& out) { write_manifest(outcome.manifest, out); });
  return {"synth",
          {{"compositions", outcome.compositions},
           {"samples", outcome.manifest.size()},
           {"dropped", outcome.dropped}}};
}

inline StageReport run_resize(const PipelineConfig& cfg) {
  DatasetManifest manifest =
      read_manifest(require_artifact(cfg.work_dir, "resize", "bucketed.jsonl"));
  auto resized = parallel_map(
      manifest.samples,
      [&](const GroundingSample& s) { return apply_policy(s, cfg.resize_mode, cfg.resolution); },
      cfg.worker_count);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < resized.size(); ++i)
    if (resized[i].image_size.width != manifest.samples[i].image_size.width ||
        resized[i].image_size.height != manifest.samples[i].image_size.height)
      ++changed;
  DatasetManifest out;
  out.samples = std::move(resized);
  atomic_write(cfg.work_dir / "resized.jsonl",
               [&](std::ostream& stream) { write_manifest(out, stream); });
  return {"resize",
          {{"samples", out.size()}, {"resized", changed}, {"unchanged", out.size() - changed}}};
}

inline StageReport run_rl_sim(const PipelineConfig& cfg) {
  DatasetManifest manifest =
      read_manifest(require_artifact(cfg.work_dir, "rl-sim", "bucketed.jsonl"));
  auto tasks = tasks_from_manifest(manifest);
  TrainingLog log = simulate_training(tasks, cfg.sim);
  atomic_write(cfg.work_dir / "rl-log.csv",
               [&](std::ostream& out) { write_training_log(log, out); });
  return {"rl-sim", {{"tasks", tasks.size()}, {"steps", log.rows.size()}}};
}

inline StageReport run_eval(const PipelineConfig& cfg) {
  require_external("eval", "eval.bench", cfg.eval_bench, false);
  require_external("eval", "eval.preds", cfg.eval_preds, false);
  auto bench = read_bench(cfg.eval_bench);
  auto preds = read_predictions(cfg.eval_preds);
  ScoreTable table = score(bench, preds, cfg.worker_count);
  RenderedTable rendered = render_table(table);
  atomic_write(cfg.work_dir / "eval-report.txt",
               [&](std::ostream& out) { out << rendered.text; });
  atomic_write(cfg.work_dir / "eval-report.csv",
               [&](std::ostream& out) { out << rendered.csv; });
  return {"eval",
          {{"records", table.total_records},
           {"hits", table.total_hits},
           {"cells", table.cells.size()}}};
}

}  // namespace detail

/// Runs the named stages in the given order, each reading the artifacts of
/// its producer from `cfg.work_dir` and writing its own atomically. A stage
/// failure propagates and leaves every previously written artifact intact.
/// An empty stage list is a successful no-op.
inline PipelineReport run_pipeline(const PipelineConfig& cfg,
                                   const std::vector<std::string>& stages,
                                   StageLog log = {}) {
  cfg.validate();
  const auto& known = stage_names();
  std::set<std::string> seen;
  for (const auto& stage : stages) {
    if (std::find(known.begin(), known.end(), stage) == known.end()) {
      std::string expected;
      for (const auto& name : known) expected += (expected.empty() ? "" : ", ") + name;
      throw ValidationError("unknown stage '" + stage + "' (expected one of: " + expected + ")");
    }
    if (!seen.insert(stage).second)
      throw ValidationError("stage '" + stage + "' listed twice");
  }

  PipelineReport report;
  if (stages.empty()) return report;
  std::filesystem::create_directories(cfg.work_dir);
  for (const auto& stage : stages) {
    log.event(stage, "start");
    StageReport r;
    if (stage == "ingest")
      r = detail::run_ingest(cfg);
    else if (stage == "filter")
      r = detail::run_filter(cfg);
    else if (stage == "entropy")
      r = detail::run_entropy(cfg);
    else if (stage == "synth")
      r = detail::run_synth(cfg);
    else if (stage == "resize")
      r = detail::run_resize(cfg);
    else if (stage == "rl-sim")
      r = detail::run_rl_sim(cfg);
    else
      r = detail::run_eval(cfg);
    StageLog::Fields fields;
    for (const auto& [key, count] : r.counts) fields.emplace_back(key, count);
    log.event(stage, "done", fields);
    report.stages.push_back(std::move(r));
  }
  return report;
}

}  // namespace forge
