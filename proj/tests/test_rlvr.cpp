#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "forge/rlvr.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

GroupRollout random_group(std::mt19937_64& rng, int g_max = 4, int tok_max = 8) {
  std::uniform_int_distribution<int> g_dist(2, g_max), tok_dist(1, tok_max);
  std::uniform_real_distribution<double> lp(-3.0, 0.0);
  std::uniform_int_distribution<int> coin(0, 1);
  GroupRollout group;
  group.task_id = "t";
  group.target = {0.25, 0.25, 0.75, 0.75};
  int g = g_dist(rng);
  for (int i = 0; i < g; ++i) {
    Rollout r;
    int tokens = tok_dist(rng);
    for (int t = 0; t < tokens; ++t) {
      r.logprob_new.push_back(lp(rng));
      r.logprob_old.push_back(lp(rng));
    }
    group.rollouts.push_back(std::move(r));
    group.rewards.push_back(coin(rng));
  }
  // mixed outcomes are not guaranteed; zero-variance groups are valid too
  group.advantages = group_advantages(group.rewards);
  return group;
}

std::vector<oracle::RolloutRef> to_oracle(const GroupRollout& g) {
  std::vector<oracle::RolloutRef> out;
  for (std::size_t i = 0; i < g.rollouts.size(); ++i)
    out.push_back({g.rollouts[i].logprob_new, g.rollouts[i].logprob_old, g.advantages[i]});
  return out;
}

}  // namespace

TEST_CASE("binary reward includes all four edges", "[rlvr]") {
  NormBox box{0.4, 0.4, 0.6, 0.6};
  CHECK(binary_reward({0.5, 0.5}, box) == 1.0);
  CHECK(binary_reward({0.4, 0.5}, box) == 1.0);
  CHECK(binary_reward({0.6, 0.5}, box) == 1.0);
  CHECK(binary_reward({0.5, 0.4}, box) == 1.0);
  CHECK(binary_reward({0.5, 0.6}, box) == 1.0);
  CHECK(binary_reward({0.39, 0.5}, box) == 0.0);
  CHECK(binary_reward({0.5, 0.61}, box) == 0.0);
}

TEST_CASE("binary reward matches interval membership on a full grid", "[rlvr]") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> milli(0, 1000);
  for (int trial = 0; trial < 20; ++trial) {
    double xa = milli(rng) / 1000.0, xb = milli(rng) / 1000.0;
    double ya = milli(rng) / 1000.0, yb = milli(rng) / 1000.0;
    NormBox box = ordered_box(xa, ya, xb, yb);
    long long mismatches = 0;
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 100; ++j) {
        double x = i / 100.0, y = j / 100.0;
        bool member = x >= box.x0 && x <= box.x1 && y >= box.y0 && y <= box.y1;
        if (binary_reward({x, y}, box) != (member ? 1.0 : 0.0)) ++mismatches;
      }
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("advantage fixtures", "[rlvr]") {
  auto all_one = group_advantages({1, 1, 1, 1});
  for (double a : all_one) CHECK(a == 0.0);

  auto lone = group_advantages({1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(lone[0] == Catch::Approx(std::sqrt(7.0)).epsilon(1e-12));
  for (int i = 1; i < 8; ++i)
    CHECK(lone[i] == Catch::Approx(-1.0 / std::sqrt(7.0)).epsilon(1e-12));

  auto half = group_advantages({1, 1, 0, 0});
  CHECK(half[0] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(half[1] == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(half[2] == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK(half[3] == Catch::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(group_advantages({1}), ValidationError);
}

TEST_CASE("non-degenerate advantages have mean 0 and population std 1", "[rlvr]") {
  for (int g : {2, 4, 8}) {
    // every mixed-outcome composition: 1..g-1 successes
    for (int wins = 1; wins < g; ++wins) {
      std::vector<double> rewards(g, 0.0);
      for (int i = 0; i < wins; ++i) rewards[i] = 1.0;
      auto adv = group_advantages(rewards);
      double mean = 0.0, var = 0.0;
      for (double a : adv) mean += a;
      mean /= g;
      for (double a : adv) var += (a - mean) * (a - mean);
      var /= g;
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("permuting rollouts permutes advantages identically", "[rlvr]") {
  std::vector<double> rewards{1, 0, 1, 1, 0, 0, 1, 0};
  auto adv = group_advantages(rewards);
  std::mt19937_64 rng(7);
  std::vector<std::size_t> perm(rewards.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> shuffled;
  for (auto i : perm) shuffled.push_back(rewards[i]);
  auto adv2 = group_advantages(shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(adv2[i] == adv[perm[i]]);
}

TEST_CASE("objective with unit ratios reduces to the advantage average", "[rlvr]") {
  GroupRollout g;
  g.task_id = "unit";
  g.target = {0, 0, 1, 1};
  std::vector<int> tokens{3, 1, 4};
  g.rewards = {1, 0, 1};
  g.advantages = group_advantages(g.rewards);
  for (int count : tokens) {
    Rollout r;
    for (int t = 0; t < count; ++t) {
      r.logprob_new.push_back(-1.25);
      r.logprob_old.push_back(-1.25);
    }
    g.rollouts.push_back(std::move(r));
  }
  double want = (g.advantages[0] * 3 + g.advantages[1] * 1 + g.advantages[2] * 4) / 8.0;
  CHECK(grpo_objective({g}, 0.2) == Catch::Approx(want).epsilon(1e-12));

  // epsilon-invariance at r == 1
  for (double eps : {0.01, 0.1, 0.2, 0.5, 0.99}) {
    CHECK(grpo_objective({g}, eps) == Catch::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("clipping engages above 1+eps with positive advantage", "[rlvr]") {
  double eps = 0.2;
  GroupRollout g;
  g.task_id = "clip";
  g.target = {0, 0, 1, 1};
  Rollout a, b;
  a.logprob_new = {std::log(1.0 + 2 * eps)};
  a.logprob_old = {0.0};  // ratio = 1 + 2 eps
  b.logprob_new = {0.0};
  b.logprob_old = {0.0};
  g.rollouts = {a, b};
  g.rewards = {1, 0};
  g.advantages = group_advantages(g.rewards);  // (+1, -1)
  // token 1 clips to (1+eps)*1; token 2 contributes 1*(-1)
  double want = ((1.0 + eps) * 1.0 + 1.0 * (-1.0)) / 2.0;
  CHECK(grpo_objective({g}, eps) == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("objective matches the naive double-loop reference", "[rlvr]") {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> eps_dist(0.05, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    double eps = eps_dist(rng);
    std::uniform_int_distribution<int> group_count(1, 3);
    std::vector<GroupRollout> groups;
    int n = group_count(rng);
    for (int i = 0; i < n; ++i) groups.push_back(random_group(rng));
    double fast = grpo_objective(groups, eps);
    double slow = 0.0;
    for (const auto& g : groups) slow += oracle::grpo_group_naive(to_oracle(g), eps);
    slow /= n;
    CHECK(fast == Catch::Approx(slow).margin(1e-12));
  }
}

TEST_CASE("every token term respects the clipping bound", "[rlvr]") {
  std::mt19937_64 rng(131);
  for (int trial = 0; trial < 50; ++trial) {
    auto g = random_group(rng);
    double eps = 0.2;
    double obj = grpo_objective({g}, eps);
    CHECK(std::isfinite(obj));
    for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
      const auto& r = g.rollouts[i];
      for (std::size_t t = 0; t < r.logprob_new.size(); ++t) {
        double ratio = std::exp(r.logprob_new[t] - r.logprob_old[t]);
        double clipped = std::clamp(ratio, 1 - eps, 1 + eps);
        double term = std::min(ratio * g.advantages[i], clipped * g.advantages[i]);
        CHECK(term <= std::max(ratio, 1 + eps) * std::abs(g.advantages[i]) + 1e-12);
      }
    }
  }
}

TEST_CASE("shape mismatches are rejected", "[rlvr]") {
  GroupRollout g;
  g.task_id = "bad";
  g.target = {0, 0, 1, 1};
  Rollout r;
  r.logprob_new = {-1.0, -1.0};
  r.logprob_old = {-1.0};
  g.rollouts = {r, r};
  g.rewards = {1, 0};
  g.advantages = group_advantages(g.rewards);
  CHECK_THROWS_AS(grpo_objective({g}, 0.2), ValidationError);
  CHECK_THROWS_AS(grpo_objective({}, 0.2), ValidationError);
}

TEST_CASE("KL hook defaults off and subtracts when provided", "[rlvr]") {
  std::mt19937_64 rng(137);
  auto g = random_group(rng);
  double base = grpo_objective({g}, 0.2);
  CHECK(grpo_objective({g}, 0.2, nullptr) == base);
  CHECK(grpo_objective({g}, 0.2, [](const Rollout&) { return 0.0; }) == base);

  long long tokens = 0;
  for (const auto& r : g.rollouts) tokens += static_cast<long long>(r.token_count());
  double with_kl = grpo_objective({g}, 0.2, [](const Rollout&) { return 0.5; });
  double want = base - 0.5 * static_cast<double>(g.rollouts.size()) / tokens;
  CHECK(with_kl == Catch::Approx(want).epsilon(1e-12));
}

TEST_CASE("pass-rate window keeps exactly the non-degenerate groups", "[rlvr]") {
  CHECK_FALSE(pass_rate_filter(0, 8));
  CHECK_FALSE(pass_rate_filter(7, 8));
  CHECK_FALSE(pass_rate_filter(8, 8));
  for (int passes = 1; passes <= 6; ++passes) CHECK(pass_rate_filter(passes, 8));

  // under defaults the kept set is exactly the mixed-outcome groups up to 75%
  for (int passes = 0; passes <= 8; ++passes) {
    bool kept = pass_rate_filter(passes, 8);
    bool expected = passes >= 1 && passes <= 6;
    CHECK(kept == expected);
  }

  CHECK_THROWS_AS(pass_rate_filter(3, 0), ValidationError);
  CHECK_THROWS_AS(pass_rate_filter(9, 8), ValidationError);
  PassRateConfig bad;
  bad.low = 0.8;
  bad.high = 0.5;
  CHECK_THROWS_AS(pass_rate_filter(3, 8, bad), ValidationError);
}

TEST_CASE("curriculum stages activate by cumulative step budgets", "[rlvr]") {
  CurriculumConfig cfg;
  cfg.stages = curriculum_from_string("easy:50,easy+medium:50,all:100");
  REQUIRE(cfg.stages.size() == 3);
  CHECK(cfg.stages[0].allowed == std::set<Bucket>{Bucket::Easy});
  CHECK(cfg.stages[1].allowed == std::set<Bucket>{Bucket::Easy, Bucket::Medium});
  CHECK(cfg.stages[2].allowed ==
        std::set<Bucket>{Bucket::Easy, Bucket::Medium, Bucket::Hard});

  CHECK(&stage_for_step(cfg, 0) == &cfg.stages[0]);
  CHECK(&stage_for_step(cfg, 49) == &cfg.stages[0]);
  CHECK(&stage_for_step(cfg, 50) == &cfg.stages[1]);
  CHECK(&stage_for_step(cfg, 99) == &cfg.stages[1]);
  CHECK(&stage_for_step(cfg, 100) == &cfg.stages[2]);
  CHECK(&stage_for_step(cfg, 500) == &cfg.stages[2]);

  CHECK_THROWS_AS(curriculum_from_string("easy"), ValidationError);
  CHECK_THROWS_AS(curriculum_from_string("easy:x"), ValidationError);
  CHECK_THROWS_AS(curriculum_from_string(""), ValidationError);
  CHECK_THROWS_AS(curriculum_from_string("nope:10"), ValidationError);
}
