#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "forge/config.hpp"
#include "forge/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

void require_input_file(const fs::path& path, const std::string& what) {
  if (!fs::exists(path))
    throw forge::DependencyError(what + " '" + path.string() + "' not found");
}

void require_input_dir(const fs::path& path, const std::string& what) {
  if (!fs::is_directory(path))
    throw forge::DependencyError(what + " '" + path.string() + "' is not a directory");
}

struct IngestArgs {
  std::string adapter = "flat-list";
  fs::path input, out, reject;
  unsigned workers = 0;
};

void cmd_ingest(const IngestArgs& a) {
  require_input_file(a.input, "input");
  const forge::FormatAdapter& adapter = forge::find_adapter(a.adapter);
  std::ifstream in(a.input);
  if (!in) throw forge::IoError("cannot open '" + a.input.string() + "'");
  forge::IngestResult result = forge::ingest_dataset(adapter, in, a.workers);
  forge::atomic_write(a.out,
                      [&](std::ostream& out) { forge::write_manifest(result.manifest, out); });
  if (!a.reject.empty())
    forge::atomic_write(a.reject, [&](std::ostream& out) {
      forge::write_rejections(result.rejections, out);
    });
  std::cout << "ingest: " << result.input_records << " records -> "
            << result.manifest.size() << " samples, " << result.rejections.size()
            << " rejected\n";
}

struct FilterArgs {
  fs::path manifest, detections_dir, out, dropped;
  forge::FilterConfig cfg;
  unsigned workers = 0;
};

void cmd_filter(const FilterArgs& a) {
  require_input_file(a.manifest, "manifest");
  require_input_dir(a.detections_dir, "detections dir");
  a.cfg.validate();
  forge::DatasetManifest manifest = forge::read_manifest(a.manifest);
  auto detections = forge::load_detections_dir(a.detections_dir);
  forge::FilterResult result = forge::filter_dataset(manifest, detections, a.cfg, a.workers);
  forge::atomic_write(a.out,
                      [&](std::ostream& out) { forge::write_manifest(result.kept, out); });
  if (!a.dropped.empty())
    forge::atomic_write(a.dropped, [&](std::ostream& out) {
      forge::write_manifest(result.dropped, out);
      forge::write_manifest(result.missing, out);
    });
  std::cout << "filter: kept " << result.kept.size() << " of " << manifest.size()
            << " (dropped " << result.dropped.size() << ", missing detections "
            << result.missing.size() << ")\n";
}

struct EntropyArgs {
  fs::path manifest, elements_dir, out, tagged_out;
  forge::EntropyConfig cfg;
  forge::BucketQuantiles quantiles;
};

void cmd_entropy(const EntropyArgs& a) {
  require_input_file(a.manifest, "manifest");
  a.cfg.validate();
  a.quantiles.validate();
  forge::DatasetManifest manifest = forge::read_manifest(a.manifest);
  std::map<std::string, forge::DetectionSet> elements;
  if (!a.elements_dir.empty()) {
    require_input_dir(a.elements_dir, "elements dir");
    elements = forge::load_detections_dir(a.elements_dir);
  }
  forge::EntropyOutcome outcome =
      forge::entropy_over_manifest(manifest, elements, a.cfg, a.quantiles);
  forge::atomic_write(a.out, [&](std::ostream& out) {
    for (const auto& r : outcome.reports) out << forge::report_to_json(r).dump() << '\n';
  });
  if (!a.tagged_out.empty())
    forge::atomic_write(a.tagged_out, [&](std::ostream& out) {
      forge::write_manifest(outcome.tagged, out);
    });
  std::size_t buckets[3] = {0, 0, 0};
  for (const auto& r : outcome.reports) ++buckets[static_cast<int>(*r.bucket)];
  std::cout << "entropy: " << outcome.reports.size() << " images (easy " << buckets[0]
            << ", medium " << buckets[1] << ", hard " << buckets[2] << ")\n";
}

struct SynthArgs {
  forge::SynthConfig cfg;
  std::uint64_t seed = 7;
  fs::path out_dir;
};

void cmd_synth(const SynthArgs& a) {
  require_input_dir(a.cfg.assets_dir, "assets dir");
  require_input_dir(a.cfg.backgrounds_dir, "backgrounds dir");
  a.cfg.validate();
  forge::SynthOutcome outcome = forge::synthesize_dataset(a.cfg, a.seed, a.out_dir);
  forge::atomic_write(a.out_dir / "synth.jsonl", [&](std::ostream& out) {
    forge::write_manifest(outcome.manifest, out);
  });
  std::cout << "synth: " << outcome.compositions << " compositions -> "
            << outcome.manifest.size() << " samples (" << outcome.dropped
            << " annotations dropped)\n";
}

struct ResizeArgs {
  fs::path manifest, out;
  std::string mode = "train";
  int cap_w = 0, cap_h = 0;  // 0 keeps the mode's default
  unsigned workers = 0;
};

void cmd_resize(const ResizeArgs& a) {
  require_input_file(a.manifest, "manifest");
  forge::ResolutionPolicy policy;
  forge::ResizeMode mode;
  if (a.mode == "train")
    mode = forge::ResizeMode::Train;
  else if (a.mode == "infer")
    mode = forge::ResizeMode::Infer;
  else
    throw forge::ValidationError("resize: mode must be 'train' or 'infer', got '" + a.mode +
                                 "'");
  forge::ImageSize& cap =
      mode == forge::ResizeMode::Train ? policy.train_cap : policy.infer_cap;
  if (a.cap_w > 0) cap.width = a.cap_w;
  if (a.cap_h > 0) cap.height = a.cap_h;
  policy.validate();

  forge::DatasetManifest manifest = forge::read_manifest(a.manifest);
  auto resized = forge::parallel_map(
      manifest.samples,
      [&](const forge::GroundingSample& s) { return forge::apply_policy(s, mode, policy); },
      a.workers);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < resized.size(); ++i)
    if (resized[i].image_size.width != manifest.samples[i].image_size.width ||
        resized[i].image_size.height != manifest.samples[i].image_size.height)
      ++changed;
  forge::DatasetManifest out;
  out.samples = std::move(resized);
  forge::atomic_write(a.out,
                      [&](std::ostream& stream) { forge::write_manifest(out, stream); });
  std::cout << "resize: " << out.size() << " samples, " << changed << " resized\n";
}

struct RlSimArgs {
  std::string tasks = "synthetic:10";
  forge::SimConfig cfg;
  std::string curriculum;
  fs::path log = "rl-log.csv";
};

void cmd_rl_sim(const RlSimArgs& a) {
  forge::SimConfig cfg = a.cfg;
  if (!a.curriculum.empty())
    cfg.curriculum.stages = forge::curriculum_from_string(a.curriculum);
  cfg.validate();
  auto tasks = forge::resolve_sim_tasks(a.tasks, cfg.seed);
  forge::TrainingLog log = forge::simulate_training(tasks, cfg);
  forge::atomic_write(a.log,
                      [&](std::ostream& out) { forge::write_training_log(log, out); });
  std::size_t window = std::min<std::size_t>(20, log.rows.size());
  std::printf("rl-sim: %zu steps over %zu tasks; mean reward %.4f -> %.4f\n",
              log.rows.size(), tasks.size(), log.mean_reward_over(0, window),
              log.mean_reward_over(log.rows.size() - window, window));
}

struct EvalArgs {
  fs::path bench, preds, report, csv;
  unsigned workers = 0;
};

void cmd_eval(const EvalArgs& a) {
  require_input_file(a.bench, "benchmark");
  require_input_file(a.preds, "predictions");
  auto bench = forge::read_bench(a.bench);
  auto preds = forge::read_predictions(a.preds);
  forge::ScoreTable table = forge::score(bench, preds, a.workers);
  forge::RenderedTable rendered = forge::render_table(table);
  std::cout << rendered.text;
  if (!a.report.empty())
    forge::atomic_write(a.report, [&](std::ostream& out) { out << rendered.text; });
  if (!a.csv.empty())
    forge::atomic_write(a.csv, [&](std::ostream& out) { out << rendered.csv; });
}

struct StatsArgs {
  fs::path manifest;
};

void cmd_stats(const StatsArgs& a) {
  require_input_file(a.manifest, "manifest");
  forge::StatsSummary summary = forge::summarize(forge::read_manifest(a.manifest));
  std::cout << forge::stats_to_json(summary).dump(2) << '\n';
}

struct PipelineArgs {
  fs::path config;
  std::vector<std::string> stages;
};

void cmd_pipeline(const PipelineArgs& a) {
  require_input_file(a.config, "config");
  forge::PipelineConfig cfg = forge::load_pipeline_config(a.config);
  forge::StageLog log(&std::cerr);
  forge::PipelineReport report = forge::run_pipeline(cfg, a.stages, log);
  for (const auto& stage : report.stages) {
    std::cout << stage.stage << ":";
    for (const auto& [key, value] : stage.counts) std::cout << ' ' << key << '=' << value;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dataset engineering and RL training tools for GUI grounding"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "normalize a raw dataset into a manifest");
  ingest_cmd->add_option("--adapter", ingest.adapter, "input format (flat-list, tagged, csv)");
  ingest_cmd->add_option("--input", ingest.input, "raw dataset file")->required();
  ingest_cmd->add_option("--out", ingest.out, "output manifest JSONL")->required();
  ingest_cmd->add_option("--reject", ingest.reject, "rejection report JSONL");
  ingest_cmd->add_option("--workers", ingest.workers, "worker threads (0 = serial)");
  ingest_cmd->callback([&] { cmd_ingest(ingest); });

  FilterArgs filter;
  auto* filter_cmd = app.add_subcommand("filter", "drop samples the detector cannot cover");
  filter_cmd->add_option("--manifest", filter.manifest, "input manifest")->required();
  filter_cmd->add_option("--detections-dir", filter.detections_dir, "DetectionSet JSON dir")
      ->required();
  filter_cmd->add_option("--tau", filter.cfg.tau, "minimum coverage score to keep");
  filter_cmd->add_option("--side-l", filter.cfg.side_l, "point expansion side fraction");
  filter_cmd->add_option("--out", filter.out, "kept manifest JSONL")->required();
  filter_cmd->add_option("--dropped", filter.dropped, "dropped + missing manifest JSONL");
  filter_cmd->add_option("--workers", filter.workers, "worker threads (0 = serial)");
  filter_cmd->callback([&] { cmd_filter(filter); });

  EntropyArgs entropy;
  auto* entropy_cmd =
      app.add_subcommand("entropy", "score layout complexity and bucket the dataset");
  entropy_cmd->add_option("--manifest", entropy.manifest, "input manifest")->required();
  entropy_cmd->add_option("--elements-dir", entropy.elements_dir,
                          "DetectionSet JSON dir for element centers");
  entropy_cmd->add_option("--d", entropy.cfg.d, "projection directions");
  entropy_cmd->add_option("--b", entropy.cfg.b, "1D histogram bins");
  entropy_cmd->add_option("--m", entropy.cfg.m, "2D grid side");
  entropy_cmd->add_option("--wn", entropy.cfg.w_n, "element count exponent");
  entropy_cmd->add_option("--w1d", entropy.cfg.w_1d, "1D entropy weight");
  entropy_cmd->add_option("--w2d", entropy.cfg.w_2d, "2D entropy weight");
  entropy_cmd->add_option("--q-easy", entropy.quantiles.q_easy, "easy quantile");
  entropy_cmd->add_option("--q-hard", entropy.quantiles.q_hard, "hard quantile");
  entropy_cmd->add_option("--out", entropy.out, "entropy reports JSONL")->required();
  entropy_cmd->add_option("--tagged-out", entropy.tagged_out,
                          "manifest JSONL with bucket tags added");
  entropy_cmd->callback([&] { cmd_entropy(entropy); });

  SynthArgs synth;
  auto* synth_cmd =
      app.add_subcommand("synth", "compose window assets into synthetic screenshots");
  synth_cmd->add_option("--assets-dir", synth.cfg.assets_dir, "window asset dir")->required();
  synth_cmd->add_option("--backgrounds-dir", synth.cfg.backgrounds_dir, "background PNG dir")
      ->required();
  synth_cmd->add_option("--k", synth.cfg.k_windows, "windows per composition");
  synth_cmd->add_option("--count", synth.cfg.count, "number of compositions")->required();
  synth_cmd->add_option("--seed", synth.seed, "plan seed");
  synth_cmd->add_option("--scale-min", synth.cfg.plan.scale_min, "minimum window scale");
  synth_cmd->add_option("--scale-max", synth.cfg.plan.scale_max, "maximum window scale");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output dir for PNGs + synth.jsonl")
      ->required();
  synth_cmd->callback([&] { cmd_synth(synth); });

  ResizeArgs resize;
  auto* resize_cmd = app.add_subcommand("resize", "cap image resolutions in a manifest");
  resize_cmd->add_option("--manifest", resize.manifest, "input manifest")->required();
  resize_cmd->add_option("--mode", resize.mode, "train or infer");
  resize_cmd->add_option("--cap-w", resize.cap_w, "cap width for the chosen mode");
  resize_cmd->add_option("--cap-h", resize.cap_h, "cap height for the chosen mode");
  resize_cmd->add_option("--out", resize.out, "output manifest JSONL")->required();
  resize_cmd->add_option("--workers", resize.workers, "worker threads (0 = serial)");
  resize_cmd->callback([&] { cmd_resize(resize); });

  RlSimArgs rlsim;
  auto* rlsim_cmd =
      app.add_subcommand("rl-sim", "run the verifiable-reward training simulator");
  rlsim_cmd->add_option("--tasks", rlsim.tasks, "manifest path or synthetic:<n>");
  rlsim_cmd->add_option("--g", rlsim.cfg.g, "rollouts per task per step");
  rlsim_cmd->add_option("--epsilon", rlsim.cfg.epsilon, "surrogate clip width");
  rlsim_cmd->add_option("--steps", rlsim.cfg.steps, "training steps");
  rlsim_cmd->add_option("--seed", rlsim.cfg.seed, "rng seed");
  rlsim_cmd->add_option("--curriculum", rlsim.curriculum,
                        "stage spec, e.g. easy:50,medium:50,hard:100");
  rlsim_cmd->add_option("--pass-low", rlsim.cfg.curriculum.pass_rate.low,
                        "pass-rate window lower bound (exclusive)");
  rlsim_cmd->add_option("--pass-high", rlsim.cfg.curriculum.pass_rate.high,
                        "pass-rate window upper bound (inclusive)");
  rlsim_cmd->add_option("--log", rlsim.log, "training log CSV path");
  rlsim_cmd->callback([&] { cmd_rl_sim(rlsim); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against a benchmark");
  eval_cmd->add_option("--bench", eval.bench, "benchmark JSONL")->required();
  eval_cmd->add_option("--preds", eval.preds, "predictions JSONL")->required();
  eval_cmd->add_option("--report", eval.report, "write the text table here");
  eval_cmd->add_option("--csv", eval.csv, "write the CSV table here");
  eval_cmd->add_option("--workers", eval.workers, "worker threads (0 = serial)");
  eval_cmd->callback([&] { cmd_eval(eval); });

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "summarize a manifest as JSON");
  stats_cmd->add_option("--manifest", stats.manifest, "input manifest")->required();
  stats_cmd->callback([&] { cmd_stats(stats); });

  PipelineArgs pipeline;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run configured stages in order");
  pipeline_cmd->add_option("--config", pipeline.config, "pipeline config file")->required();
  pipeline_cmd->add_option("--stages", pipeline.stages, "comma-separated stage list")
      ->required()
      ->delimiter(',');
  pipeline_cmd->callback([&] { cmd_pipeline(pipeline); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const forge::ValidationError& e) {
    std::cerr << "forge: " << e.what() << '\n';
    return 2;
  } catch (const forge::ParseError& e) {
    std::cerr << "forge: " << e.what() << '\n';
    return 2;
  } catch (const forge::DependencyError& e) {
    std::cerr << "forge: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "forge: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
