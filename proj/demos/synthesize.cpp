// Synthesizes annotated screenshots by compositing window crops onto a
// backdrop. Every surviving annotation is emitted twice — once as a point
// task, once as a box task — and windows that bury an annotation under a
// higher window knock it out of the yield.

#include <cstdio>
#include <filesystem>

#include "forge/manifest_io.hpp"
#include "forge/overlay.hpp"
#include "forge/png.hpp"

using namespace forge;

namespace {

void fill_rect(Image& img, const NormBox& box, std::array<std::uint8_t, 4> rgba) {
  int x0 = static_cast<int>(box.x0 * img.width), x1 = static_cast<int>(box.x1 * img.width);
  int y0 = static_cast<int>(box.y0 * img.height), y1 = static_cast<int>(box.y1 * img.height);
  for (int y = std::max(0, y0); y < std::min(img.height, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width, x1); ++x)
      for (int c = 0; c < 4; ++c) img.at(x, y)[c] = rgba[static_cast<std::size_t>(c)];
}

WindowAsset make_window(const std::string& id, int w, int h,
                        std::vector<std::pair<std::string, NormBox>> controls) {
  WindowAsset asset;
  asset.id = id;
  asset.image = Image::filled(w, h, {240, 240, 244, 255});
  fill_rect(asset.image, {0, 0, 1, 0.12}, {70, 80, 120, 255});  // title bar
  int i = 0;
  for (auto& [instruction, box] : controls) {
    auto shade = static_cast<std::uint8_t>(90 + 40 * i++);
    fill_rect(asset.image, box, {shade, 140, 90, 255});
    asset.annotations.push_back({instruction, box});
  }
  return asset;
}

}  // namespace

int main() {
  std::vector<WindowAsset> assets{
      make_window("mail", 480, 360,
                  {{"compose a new message", {0.05, 0.20, 0.30, 0.30}},
                   {"open the first thread", {0.05, 0.40, 0.95, 0.52}}}),
      make_window("files", 420, 320, {{"create a folder", {0.70, 0.18, 0.95, 0.30}}}),
      make_window("terminal", 520, 300, {{"focus the prompt", {0.03, 0.80, 0.97, 0.95}}}),
  };
  Image backdrop = Image::filled(960, 600, {28, 30, 38, 255});

  auto out_dir = std::filesystem::temp_directory_path() / "forge-demo-synth";
  std::filesystem::create_directories(out_dir);

  DatasetManifest manifest;
  for (std::uint64_t seed : {7, 13, 19}) {
    auto plan = plan_random(assets, {backdrop.width, backdrop.height}, 2, seed);
    plan.background_id = "desk" + std::to_string(seed);
    auto result = compose(assets, backdrop, plan);

    auto png_path = out_dir / (plan.background_id + "-synth.png");
    write_png(result.image, png_path);
    std::printf("seed %llu: %zu samples, %zu dropped -> %s\n",
                static_cast<unsigned long long>(seed), result.samples.size(),
                result.dropped.size(), png_path.c_str());
    for (const auto& reason : result.dropped) std::printf("  dropped: %s\n", reason.c_str());
    for (auto& s : result.samples) manifest.samples.push_back(std::move(s));
  }

  auto manifest_path = out_dir / "synth.jsonl";
  write_manifest(manifest, manifest_path);
  std::printf("\nwrote %zu samples to %s; first two lines:\n", manifest.size(),
              manifest_path.c_str());
  for (std::size_t i = 0; i < 2 && i < manifest.size(); ++i)
    std::printf("%s\n", to_jsonl(manifest.samples[i]).c_str());

  // The same windows round-trip through the on-disk asset layout.
  auto asset_dir = out_dir / "assets" / assets[0].id;
  save_window_asset(assets[0], asset_dir);
  auto reloaded = load_assets_dir(out_dir / "assets");
  std::printf("\nsaved and reloaded %zu asset(s); '%s' carries %zu annotations\n",
              reloaded.size(), reloaded[0].id.c_str(), reloaded[0].annotations.size());
  return 0;
}
