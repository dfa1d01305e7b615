#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "forge/manifest_io.hpp"
#include "forge/resolution.hpp"

using namespace forge;

TEST_CASE("cap_resize reference cases", "[resolution]") {
  auto identity = cap_resize({1920, 1080}, {2000, 2000});
  CHECK(identity.size == ImageSize{1920, 1080});
  CHECK(identity.scale == 1.0);

  auto half = cap_resize({4000, 3000}, {2000, 2000});
  CHECK(half.size == ImageSize{2000, 1500});
  CHECK(half.scale == 0.5);

  auto third = cap_resize({3000, 6000}, {2000, 2000});
  CHECK(third.size == ImageSize{1000, 2000});
  CHECK(third.scale == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

  // training cap leaves a 2560x1920 image untouched
  auto train = cap_resize({2560, 1920}, {3072, 3072});
  CHECK(train.size == ImageSize{2560, 1920});
  CHECK(train.scale == 1.0);
}

TEST_CASE("double application is a fixed point", "[resolution]") {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> dim(1, 8000), capdim(1, 4000);
  for (int trial = 0; trial < 2000; ++trial) {
    ImageSize size{dim(rng), dim(rng)};
    ImageSize cap{capdim(rng), capdim(rng)};
    auto once = cap_resize(size, cap);
    auto twice = cap_resize(once.size, cap);
    CHECK(twice.size == once.size);
    CHECK(twice.scale == 1.0);
  }
}

TEST_CASE("aspect ratio survives within one floored pixel", "[resolution]") {
  std::mt19937_64 rng(67);
  std::uniform_int_distribution<int> dim(1, 8000), capdim(16, 4000);
  for (int trial = 0; trial < 2000; ++trial) {
    ImageSize size{dim(rng), dim(rng)};
    ImageSize cap{capdim(rng), capdim(rng)};
    auto r = cap_resize(size, cap);
    double nw = r.size.width, nh = r.size.height;
    double w = size.width, h = size.height;
    // flooring one axis can distort one ratio orientation but never both
    double err_wh = std::abs(nw / nh - w / h);
    double err_hw = std::abs(nh / nw - h / w);
    double bound = std::max(1.0 / nw, 1.0 / nh) + 1e-12;
    CHECK(std::min(err_wh, err_hw) <= bound);
  }
}

TEST_CASE("a larger cap never shrinks the output", "[resolution]") {
  std::mt19937_64 rng(71);
  std::uniform_int_distribution<int> dim(1, 8000), capdim(1, 4000), grow(0, 2000);
  for (int trial = 0; trial < 2000; ++trial) {
    ImageSize size{dim(rng), dim(rng)};
    ImageSize small{capdim(rng), capdim(rng)};
    ImageSize big{small.width + grow(rng), small.height + grow(rng)};
    auto a = cap_resize(size, small);
    auto b = cap_resize(size, big);
    CHECK(b.size.width >= a.size.width);
    CHECK(b.size.height >= a.size.height);
  }
}

TEST_CASE("pixel payloads scale linearly", "[resolution]") {
  auto scaled = scale_pixel_box({400, 300, 800, 600}, 0.5);
  CHECK(scaled.x0 == 200.0);
  CHECK(scaled.y0 == 150.0);
  CHECK(scaled.x1 == 400.0);
  CHECK(scaled.y1 == 300.0);
}

TEST_CASE("apply_policy records the scale and keeps annotations", "[resolution]") {
  GroundingSample s;
  s.id = "r";
  s.image_ref = "img/r.png";
  s.image_size = {4000, 3000};
  s.instruction = "x";
  s.task = TaskKind::BoxPrediction;
  s.annotation = NormBox{0.125, 0.25, 0.5, 0.75};
  s.source = "unit";

  std::string before = to_jsonl(s);
  auto resized = apply_policy(s, ResizeMode::Infer, {});
  CHECK(resized.image_size == ImageSize{2000, 1500});
  CHECK(resized.has_tag("resized:0.5"));
  CHECK(resized.annotation == s.annotation);

  // the annotation text is byte-identical before and after
  auto strip_volatile = [](GroundingSample g) {
    g.tags.clear();
    g.image_size = {1, 1};
    return to_jsonl(g);
  };
  CHECK(strip_volatile(s) == strip_volatile(resized));

  // idempotence at the record level, tags included
  auto again = apply_policy(resized, ResizeMode::Infer, {});
  CHECK(to_jsonl(again) == to_jsonl(resized));

  // under-cap images gain no tag at all
  GroundingSample small = s;
  small.image_size = {800, 600};
  auto untouched = apply_policy(small, ResizeMode::Infer, {});
  CHECK(untouched.tags.empty());

  // train mode uses the larger default cap
  auto trained = apply_policy(s, ResizeMode::Train, {});
  CHECK(trained.image_size == ImageSize{3072, 2304});
}

TEST_CASE("normalized annotations are byte-identical across resize", "[resolution]") {
  std::mt19937_64 rng(73);
  std::uniform_int_distribution<int> milli(0, 1000), dim(100, 8000);
  for (int trial = 0; trial < 200; ++trial) {
    GroundingSample s;
    s.id = "t" + std::to_string(trial);
    s.image_size = {dim(rng), dim(rng)};
    s.instruction = "x";
    s.task = TaskKind::CenterPointLocalization;
    s.annotation = NormPoint{milli(rng) / 1000.0, milli(rng) / 1000.0};
    s.source = "unit";
    auto resized = apply_policy(s, ResizeMode::Infer, {});
    auto ann_text = [](const GroundingSample& g) {
      auto line = to_jsonl(g);
      auto at = line.find("\"annotation\"");
      return line.substr(at, line.find(']', at) - at);
    };
    CHECK(ann_text(s) == ann_text(resized));
  }
}
