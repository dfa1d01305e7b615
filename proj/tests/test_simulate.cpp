#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "forge/rng.hpp"
#include "forge/simulate.hpp"

using namespace forge;

namespace {

std::vector<SimTask> centered_tasks(std::initializer_list<Bucket> difficulties) {
  std::vector<SimTask> tasks;
  int i = 0;
  for (Bucket b : difficulties) {
    SimTask t;
    t.task_id = "centered" + std::to_string(i++);
    t.target = {0.4, 0.4, 0.6, 0.6};
    t.difficulty = b;
    tasks.push_back(std::move(t));
  }
  return tasks;
}

}  // namespace

TEST_CASE("synthetic task generator is deterministic and in-range", "[simulate]") {
  auto a = make_synthetic_tasks(10, 77);
  auto b = make_synthetic_tasks(10, 77);
  REQUIRE(a.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].task_id == b[i].task_id);
    CHECK(a[i].target.x0 == b[i].target.x0);
    CHECK(a[i].target.y1 == b[i].target.y1);
    CHECK(a[i].difficulty == b[i].difficulty);
    CHECK(a[i].target.valid());
    CHECK(a[i].target.x0 >= 0.0);
    CHECK(a[i].target.y0 >= 0.0);
    CHECK(a[i].target.x1 <= 1.0);
    CHECK(a[i].target.y1 <= 1.0);
  }
  CHECK(a[0].difficulty == Bucket::Easy);
  CHECK(a[1].difficulty == Bucket::Medium);
  CHECK(a[2].difficulty == Bucket::Hard);
  CHECK(a[3].difficulty == Bucket::Easy);
  CHECK_THROWS_AS(make_synthetic_tasks(0, 1), ValidationError);
}

TEST_CASE("a near-deterministic policy at the target center earns reward 1",
          "[simulate]") {
  // Concentration at the box center: every draw lands inside.
  SimConfig cfg;
  cfg.sigma0 = 1e-3;
  cfg.sigma_floor = 1e-3;
  cfg.steps = 5;
  cfg.seed = 3;
  auto log = simulate_training(centered_tasks({Bucket::Easy, Bucket::Medium}), cfg);
  REQUIRE(log.rows.size() == 5);
  for (const auto& row : log.rows) CHECK(row.mean_reward == 1.0);
}

TEST_CASE("a uniform policy hits a box in proportion to its area", "[simulate]") {
  Rng rng(99);
  NormBox box{0.2, 0.3, 0.7, 0.8};
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    NormPoint p{rng.uniform(), rng.uniform()};
    hits += binary_reward(p, box) > 0.5 ? 1 : 0;
  }
  double frac = static_cast<double>(hits) / n;
  CHECK(frac == Catch::Approx(box.area()).margin(0.02));
}

TEST_CASE("training runs are deterministic per seed", "[simulate]") {
  auto tasks = make_synthetic_tasks(6, 11);
  SimConfig cfg;
  cfg.steps = 40;
  cfg.seed = 5;
  auto a = simulate_training(tasks, cfg);
  auto b = simulate_training(tasks, cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].step == b.rows[i].step);
    CHECK(a.rows[i].mean_reward == b.rows[i].mean_reward);
    CHECK(a.rows[i].policy_entropy == b.rows[i].policy_entropy);
    CHECK(a.rows[i].objective == b.rows[i].objective);
  }
  cfg.seed = 6;
  auto c = simulate_training(tasks, cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    any_diff |= a.rows[i].mean_reward != c.rows[i].mean_reward;
  CHECK(any_diff);
}

TEST_CASE("the default run learns: reward rises, entropy settles", "[simulate]") {
  auto tasks = make_synthetic_tasks(10, 77);
  SimConfig cfg;
  cfg.seed = 1;
  auto log = simulate_training(tasks, cfg);
  REQUIRE(log.rows.size() == 200);
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    CHECK(log.rows[i].step == static_cast<int>(i));
    CHECK(log.rows[i].mean_reward >= 0.0);
    CHECK(log.rows[i].mean_reward <= 1.0);
    CHECK(std::isfinite(log.rows[i].policy_entropy));
    CHECK(std::isfinite(log.rows[i].objective));
  }
  double first20 = log.mean_reward_over(0, 20);
  double last20 = log.mean_reward_over(180, 20);
  CHECK(last20 > first20);
  CHECK(log.entropy_trend(50) <= 0.0);
}

TEST_CASE("curriculum stages gate which tasks are sampled", "[simulate]") {
  // Easy tasks sit at the policy mean; medium and hard targets are far away.
  auto tasks = centered_tasks({Bucket::Easy});
  SimTask medium;
  medium.task_id = "far-medium";
  medium.target = {0.02, 0.02, 0.12, 0.12};
  medium.difficulty = Bucket::Medium;
  SimTask hard;
  hard.task_id = "far-hard";
  hard.target = {0.88, 0.88, 0.98, 0.98};
  hard.difficulty = Bucket::Hard;
  tasks.push_back(medium);
  tasks.push_back(hard);

  SimConfig cfg;
  cfg.sigma0 = 1e-3;
  cfg.sigma_floor = 1e-3;
  cfg.steps = 20;
  cfg.seed = 2;
  cfg.curriculum.stages = curriculum_from_string("easy:5,easy+medium:5,all:10");

  auto log = simulate_training(tasks, cfg);
  REQUIRE(log.rows.size() == 20);
  for (int step = 0; step < 5; ++step) CHECK(log.rows[step].mean_reward == 1.0);
  for (int step = 5; step < 10; ++step) CHECK(log.rows[step].mean_reward == 0.5);
  for (int step = 10; step < 20; ++step)
    CHECK(log.rows[step].mean_reward == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("simulate rejects impossible configurations", "[simulate]") {
  auto tasks = centered_tasks({Bucket::Easy});
  SimConfig cfg;
  CHECK_THROWS_AS(simulate_training({}, cfg), ValidationError);

  SimConfig bad_g = cfg;
  bad_g.g = 1;
  CHECK_THROWS_AS(simulate_training(tasks, bad_g), ValidationError);

  SimConfig bad_sigma = cfg;
  bad_sigma.sigma0 = 1e-4;  // below the floor
  CHECK_THROWS_AS(simulate_training(tasks, bad_sigma), ValidationError);

  SimConfig empty_stage = cfg;
  empty_stage.curriculum.stages = curriculum_from_string("hard:10");
  CHECK_THROWS_AS(simulate_training(tasks, empty_stage), ValidationError);
}

TEST_CASE("training log serializes to CSV", "[simulate]") {
  auto tasks = make_synthetic_tasks(4, 9);
  SimConfig cfg;
  cfg.steps = 12;
  auto log = simulate_training(tasks, cfg);
  std::ostringstream out;
  write_training_log(log, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "step,mean_reward,policy_entropy,objective");
  int rows = 0;
  while (std::getline(in, line)) {
    if (rows == 0) CHECK(line.rfind("0,", 0) == 0);
    ++rows;
  }
  CHECK(rows == 12);
}

TEST_CASE("log helpers compute windows and slopes", "[simulate]") {
  TrainingLog log;
  for (int i = 0; i < 10; ++i) {
    LogRow row;
    row.step = i;
    row.mean_reward = static_cast<double>(i);
    row.policy_entropy = 5.0 - 0.1 * i;
    log.rows.push_back(row);
  }
  CHECK(log.mean_reward_over(2, 3) == Catch::Approx(3.0));
  CHECK(log.entropy_trend(5) == Catch::Approx(-0.1).epsilon(1e-12));
  CHECK(log.entropy_trend(1) == 0.0);
}
