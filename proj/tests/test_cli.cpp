#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forge/eval.hpp"
#include "forge/overlay.hpp"
#include "forge/png.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  auto dir = fs::temp_directory_path() / "forge-cli-tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_count(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  fs::path out_file = dir / "cli-stdout.txt";
  fs::path err_file = dir / "cli-stderr.txt";
  std::string cmd = std::string(FORGE_CLI_PATH) + " " + args + " > " + out_file.string() +
                    " 2> " + err_file.string();
  int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_text(out_file);
  r.err = read_text(err_file);
  return r;
}

std::string flat_record(const std::string& id, const std::string& image,
                        const std::string& instruction, std::vector<double> coords) {
  nlohmann::json j{{"id", id},          {"image", image},
                   {"width", 1200},     {"height", 800},
                   {"instruction", instruction}, {"annotation", coords},
                   {"source", "cli"}};
  return j.dump() + "\n";
}

/// Eight raw records: seven valid over two screens plus one broken line.
/// Only screen "a" gets detections, so filtering keeps its four samples.
void write_cli_fixture(const fs::path& dir) {
  std::string text;
  text += flat_record("a0", "a.png", "open settings", {0.2, 0.2, 0.4, 0.4});
  text += flat_record("a1", "a.png", "press save", {0.5, 0.5, 0.7, 0.7});
  text += flat_record("a2", "a.png", "tap search", {0.3, 0.6});
  text += flat_record("a3", "a.png", "tap menu", {0.6, 0.3});
  text += flat_record("b0", "b.png", "open profile", {0.1, 0.1, 0.3, 0.3});
  text += flat_record("b1", "b.png", "tap icon", {0.8, 0.8});
  text += flat_record("b2", "b.png", "press apply", {0.4, 0.4, 0.6, 0.6});
  text += "{\"id\":\"broken\",\"width\":\n";
  write_text(dir / "input.jsonl", text);

  fs::create_directories(dir / "dets");
  DetectionSet d{"a", {NormBox{0.05, 0.05, 0.95, 0.95}}, "unit"};
  write_detection_file(d, dir / "dets" / "a.json");
}

}  // namespace

TEST_CASE("cli subcommands chain over the fixture dataset") {
  auto dir = fresh_dir("chain");
  write_cli_fixture(dir);
  auto path = [&](const std::string& leaf) { return (dir / leaf).string(); };

  auto ingest = run_cli("ingest --adapter flat-list --input " + path("input.jsonl") +
                            " --out " + path("manifest.jsonl") + " --reject " +
                            path("rejects.jsonl"),
                        dir);
  CHECK(ingest.code == 0);
  CHECK(ingest.out.find("7 samples") != std::string::npos);
  CHECK(line_count(dir / "manifest.jsonl") == 7);
  CHECK(line_count(dir / "rejects.jsonl") == 1);

  auto filter = run_cli("filter --manifest " + path("manifest.jsonl") + " --detections-dir " +
                            path("dets") + " --tau 0.5 --side-l 0.04 --out " +
                            path("kept.jsonl"),
                        dir);
  CHECK(filter.code == 0);
  CHECK(filter.out.find("kept 4 of 7") != std::string::npos);
  CHECK(line_count(dir / "kept.jsonl") == 4);

  auto entropy = run_cli("entropy --manifest " + path("kept.jsonl") + " --d 4 --b 16 --m 8" +
                             " --wn 0.5 --out " + path("reports.jsonl") + " --tagged-out " +
                             path("tagged.jsonl"),
                         dir);
  CHECK(entropy.code == 0);
  CHECK(entropy.out.find("1 images") != std::string::npos);
  CHECK(line_count(dir / "reports.jsonl") == 1);
  auto tagged = read_manifest(dir / "tagged.jsonl");
  REQUIRE(tagged.size() == 4);
  for (const auto& s : tagged.samples) CHECK(s.has_tag("bucket:easy"));

  auto resize = run_cli("resize --manifest " + path("tagged.jsonl") +
                            " --mode infer --cap-w 600 --cap-h 600 --out " +
                            path("resized.jsonl"),
                        dir);
  CHECK(resize.code == 0);
  auto resized = read_manifest(dir / "resized.jsonl");
  REQUIRE(resized.size() == 4);
  CHECK(resized.samples[0].image_size.width == 600);
  CHECK(resized.samples[0].image_size.height == 400);

  auto stats = run_cli("stats --manifest " + path("resized.jsonl"), dir);
  CHECK(stats.code == 0);
  auto j = nlohmann::json::parse(stats.out);
  CHECK(j["total"] == 4);
  CHECK(j["per_source"]["cli"]["count"] == 4);
  CHECK(j["per_bucket"]["easy"] == 4);
}

TEST_CASE("cli maps error families onto exit codes") {
  auto dir = fresh_dir("codes");
  write_cli_fixture(dir);
  auto path = [&](const std::string& leaf) { return (dir / leaf).string(); };

  CHECK(run_cli("", dir).code == 2);                  // missing subcommand
  CHECK(run_cli("ingest --input x", dir).code == 2);  // missing required flag
  CHECK(run_cli("--help", dir).code == 0);

  auto missing_input = run_cli("ingest --input " + path("nope.jsonl") + " --out " +
                                   path("m.jsonl"),
                               dir);
  CHECK(missing_input.code == 3);
  CHECK(missing_input.err.find("not found") != std::string::npos);

  run_cli("ingest --input " + path("input.jsonl") + " --out " + path("m.jsonl"), dir);
  auto bad_tau = run_cli("filter --manifest " + path("m.jsonl") + " --detections-dir " +
                             path("dets") + " --tau 1.5 --out " + path("k.jsonl"),
                         dir);
  CHECK(bad_tau.code == 2);

  auto bad_bins = run_cli("entropy --manifest " + path("m.jsonl") + " --b 1 --out " +
                              path("r.jsonl"),
                          dir);
  CHECK(bad_bins.code == 2);

  auto bad_mode = run_cli("resize --manifest " + path("m.jsonl") +
                              " --mode banana --out " + path("x.jsonl"),
                          dir);
  CHECK(bad_mode.code == 2);

  CHECK(run_cli("stats --manifest " + path("ghost.jsonl"), dir).code == 3);
}

TEST_CASE("cli eval prints the table and writes both renderings") {
  auto dir = fresh_dir("eval");
  auto path = [&](const std::string& leaf) { return (dir / leaf).string(); };
  std::vector<BenchRecord> bench = {
      {"b0", NormBox{0.4, 0.4, 0.6, 0.6}, {{"platform", "Web"}}},
      {"b1", NormBox{0.4, 0.4, 0.6, 0.6}, {{"platform", "Web"}}},
  };
  std::vector<Prediction> preds = {{"b0", NormPoint{0.5, 0.5}},
                                   {"b1", NormPoint{0.1, 0.1}}};
  write_bench(bench, dir / "bench.jsonl");
  write_predictions(preds, dir / "preds.jsonl");

  auto ok = run_cli("eval --bench " + path("bench.jsonl") + " --preds " +
                        path("preds.jsonl") + " --report " + path("report.txt") + " --csv " +
                        path("report.csv"),
                    dir);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("Avg. (macro)") != std::string::npos);
  CHECK(ok.out.find("50.0") != std::string::npos);
  CHECK(read_text(dir / "report.txt") == ok.out);
  CHECK(read_text(dir / "report.csv").rfind("cell,hits,total,accuracy\n", 0) == 0);

  std::vector<Prediction> ghost = {{"zz", NormPoint{0.5, 0.5}}};
  write_predictions(ghost, dir / "ghost.jsonl");
  auto unknown = run_cli("eval --bench " + path("bench.jsonl") + " --preds " +
                             path("ghost.jsonl"),
                         dir);
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("zz") != std::string::npos);

  CHECK(run_cli("eval --bench " + path("absent.jsonl") + " --preds " + path("preds.jsonl"),
                dir)
            .code == 3);
}

TEST_CASE("cli rl-sim writes the training log") {
  auto dir = fresh_dir("rlsim");
  auto result = run_cli("rl-sim --tasks synthetic:4 --g 4 --epsilon 0.2 --steps 5 --seed 3" +
                            std::string(" --curriculum easy:2,all:3 --log ") +
                            (dir / "log.csv").string(),
                        dir);
  CHECK(result.code == 0);
  CHECK(line_count(dir / "log.csv") == 6);
  CHECK(read_text(dir / "log.csv").rfind("step,mean_reward,policy_entropy,objective\n", 0) ==
        0);
  CHECK(run_cli("rl-sim --tasks synthetic:0", dir).code == 2);
}

TEST_CASE("cli synth renders compositions and a manifest") {
  auto dir = fresh_dir("synth");
  WindowAsset asset;
  asset.id = "panel";
  asset.image = Image::filled(48, 36, {30, 33, 40, 255});
  asset.annotations.push_back({"press ok", NormBox{0.2, 0.2, 0.8, 0.8}});
  save_window_asset(asset, dir / "assets" / "panel");
  fs::create_directories(dir / "bg");
  write_png(Image::filled(240, 180, {100, 100, 100, 255}), dir / "bg" / "desk.png");

  auto result = run_cli("synth --assets-dir " + (dir / "assets").string() +
                            " --backgrounds-dir " + (dir / "bg").string() +
                            " --k 1 --count 2 --seed 3 --out-dir " + (dir / "out").string(),
                        dir);
  CHECK(result.code == 0);
  CHECK(fs::exists(dir / "out" / "desk-c0-synth.png"));
  CHECK(fs::exists(dir / "out" / "desk-c1-synth.png"));
  auto manifest = read_manifest(dir / "out" / "synth.jsonl");
  CHECK(manifest.size() == 4);
  for (const auto& s : manifest.samples) CHECK(s.source == "overlay");
}

TEST_CASE("cli pipeline runs configured stages and reports them") {
  auto dir = fresh_dir("pipeline");
  write_cli_fixture(dir);
  std::string toml =
      "[pipeline]\n"
      "workers = 2\n"
      "seed = 5\n"
      "work_dir = \"" + (dir / "work").string() + "\"\n"
      "[ingest]\n"
      "adapter = flat-list\n"
      "input = \"" + (dir / "input.jsonl").string() + "\"\n"
      "[filter]\n"
      "detections_dir = \"" + (dir / "dets").string() + "\"\n"
      "[rl-sim]\n"
      "steps = 5\n"
      "g = 4\n";
  write_text(dir / "forge.toml", toml);

  auto ok = run_cli("pipeline --config " + (dir / "forge.toml").string() +
                        " --stages ingest,filter,entropy,rl-sim",
                    dir);
  CHECK(ok.code == 0);
  CHECK(ok.out.find("ingest: records=8 samples=7 rejections=1") != std::string::npos);
  CHECK(ok.out.find("filter: input=7 kept=4") != std::string::npos);
  CHECK(fs::exists(dir / "work" / "bucketed.jsonl"));
  CHECK(fs::exists(dir / "work" / "rl-log.csv"));

  std::istringstream err_in(ok.err);
  std::string line;
  std::size_t events = 0;
  while (std::getline(err_in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("stage"));
    ++events;
  }
  CHECK(events == 8);

  auto bad_stage = run_cli("pipeline --config " + (dir / "forge.toml").string() +
                               " --stages ingest,polish",
                           dir);
  CHECK(bad_stage.code == 2);

  write_text(dir / "typo.toml", "[filter]\ntaus = 0.5\n");
  auto bad_key =
      run_cli("pipeline --config " + (dir / "typo.toml").string() + " --stages ingest", dir);
  CHECK(bad_key.code == 2);
  CHECK(bad_key.err.find("filter.taus") != std::string::npos);

  write_text(dir / "nodets.toml",
             "[pipeline]\nwork_dir = \"" + (dir / "work2").string() + "\"\n[ingest]\ninput = \"" +
                 (dir / "input.jsonl").string() + "\"\n");
  auto missing_dets = run_cli("pipeline --config " + (dir / "nodets.toml").string() +
                                  " --stages ingest,filter",
                              dir);
  CHECK(missing_dets.code == 3);
  CHECK(missing_dets.err.find("filter.detections_dir") != std::string::npos);

  CHECK(run_cli("pipeline --config " + (dir / "absent.toml").string() + " --stages ingest",
                dir)
            .code == 3);
}
