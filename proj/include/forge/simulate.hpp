#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "forge/entropy.hpp"
#include "forge/error.hpp"
#include "forge/geometry.hpp"
#include "forge/rlvr.hpp"
#include "forge/rng.hpp"

namespace forge {

/// One synthetic grounding task: hit the target box.
struct SimTask {
  std::string task_id;
  NormBox target;
  Bucket difficulty = Bucket::Easy;
};

/// Mock policy for one task: an isotropic 2D Gaussian over the unit square.
/// The learned parameters are the mean and log standard deviation.
struct PolicyParams {
  double mu_x = 0.5;
  double mu_y = 0.5;
  double log_sigma = 0.0;

  double sigma() const { return std::exp(log_sigma); }

  /// Differential entropy of the isotropic 2D Gaussian, in nats.
  double entropy() const { return std::log(2.0 * M_PI * M_E) + 2.0 * log_sigma; }
};

struct SimConfig {
  int g = 8;                  // rollouts per task per step
  double epsilon = 0.2;       // surrogate clip width
  int steps = 200;
  std::uint64_t seed = 1;
  double lr = 0.2;            // ascent rate on the numerically estimated gradient
  double max_step = 0.05;     // per-parameter update clip, in parameter units
  double fd_delta = 1e-4;     // central-difference step
  double sigma0 = 0.3;        // initial policy spread
  double sigma_floor = 0.05;  // exploration floor; also keeps log-densities finite
  double sigma_max = 0.6;     // a wider spread than the unit square is meaningless
  CurriculumConfig curriculum;  // empty stages mean one all-bucket stage

  void validate() const {
    if (g < 2) throw ValidationError("simulate: g must be >= 2");
    if (steps < 1) throw ValidationError("simulate: steps must be >= 1");
    if (!(epsilon > 0.0)) throw ValidationError("simulate: epsilon must be positive");
    if (!(lr > 0.0)) throw ValidationError("simulate: lr must be positive");
    if (!(max_step > 0.0)) throw ValidationError("simulate: max_step must be positive");
    if (!(fd_delta > 0.0)) throw ValidationError("simulate: fd_delta must be positive");
    if (!(sigma_floor > 0.0 && sigma0 >= sigma_floor && sigma0 <= sigma_max))
      throw ValidationError("simulate: need sigma_floor <= sigma0 <= sigma_max");
  }
};

struct LogRow {
  int step = 0;
  double mean_reward = 0.0;
  double policy_entropy = 0.0;
  double objective = 0.0;
};

struct TrainingLog {
  std::vector<LogRow> rows;

  double mean_reward_over(std::size_t first, std::size_t count) const {
    double sum = 0.0;
    for (std::size_t i = first; i < first + count; ++i) sum += rows.at(i).mean_reward;
    return sum / static_cast<double>(count);
  }

  /// Least-squares slope of policy entropy over the last `count` rows.
  double entropy_trend(std::size_t count) const {
    if (count > rows.size()) count = rows.size();
    if (count < 2) return 0.0;
    std::size_t first = rows.size() - count;
    double mean_x = (static_cast<double>(count) - 1.0) / 2.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < count; ++i) mean_y += rows[first + i].policy_entropy;
    mean_y /= static_cast<double>(count);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      double dx = static_cast<double>(i) - mean_x;
      num += dx * (rows[first + i].policy_entropy - mean_y);
      den += dx * dx;
    }
    return num / den;
  }
};

inline void write_training_log(const TrainingLog& log, std::ostream& out) {
  out << "step,mean_reward,policy_entropy,objective\n";
  char buf[160];
  for (const auto& row : log.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", row.step, row.mean_reward,
                  row.policy_entropy, row.objective);
    out << buf;
  }
}

inline void write_training_log(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_training_log(log, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

/// Deterministic task generator: box centers in [0.25, 0.75], sides in
/// [0.15, 0.3], difficulties rotating Easy/Medium/Hard.
inline std::vector<SimTask> make_synthetic_tasks(int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("make_synthetic_tasks: n must be >= 1");
  Rng rng(seed);
  std::vector<SimTask> tasks;
  const Bucket order[3] = {Bucket::Easy, Bucket::Medium, Bucket::Hard};
  for (int i = 0; i < n; ++i) {
    double cx = rng.uniform(0.25, 0.75);
    double cy = rng.uniform(0.25, 0.75);
    double half_w = rng.uniform(0.15, 0.3) / 2.0;
    double half_h = rng.uniform(0.15, 0.3) / 2.0;
    SimTask t;
    t.task_id = "task" + std::to_string(i);
    t.target = {cx - half_w, cy - half_h, cx + half_w, cy + half_h};
    t.difficulty = order[i % 3];
    tasks.push_back(std::move(t));
  }
  return tasks;
}

namespace detail {

inline double gaussian_logpdf(double v, double mu, double log_sigma) {
  double sigma = std::exp(log_sigma);
  double z = (v - mu) / sigma;
  return -0.5 * std::log(2.0 * M_PI) - log_sigma - 0.5 * z * z;
}

/// One task's sampled batch: the group plus the raw (pre-clamp) draws needed
/// to re-evaluate log-probabilities under perturbed parameters.
struct TaskBatch {
  std::size_t task_index = 0;
  GroupRollout group;
  std::vector<std::pair<double, double>> raw;
  int passes = 0;
};

inline double batch_surrogate(const TaskBatch& batch, const PolicyParams& params,
                              double epsilon) {
  GroupRollout g = batch.group;
  for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
    g.rollouts[i].logprob_new = {
        gaussian_logpdf(batch.raw[i].first, params.mu_x, params.log_sigma),
        gaussian_logpdf(batch.raw[i].second, params.mu_y, params.log_sigma)};
  }
  return group_surrogate(g, epsilon, nullptr);
}

}  // namespace detail

/// Runs the desk-scale RLVR loop: sample G rollouts per eligible task from
/// the per-task Gaussian policy, reward them with the point-in-box check,
/// drop tasks outside the pass-rate window, normalize advantages within each
/// surviving group, and ascend a central-difference estimate of the
/// grpo_objective gradient. Deterministic for a fixed seed.
inline TrainingLog simulate_training(const std::vector<SimTask>& tasks, SimConfig cfg) {
  cfg.validate();
  if (tasks.empty()) throw ValidationError("simulate: no tasks");
  if (cfg.curriculum.stages.empty()) {
    CurriculumStage all;
    all.allowed = {Bucket::Easy, Bucket::Medium, Bucket::Hard};
    all.steps = cfg.steps;
    cfg.curriculum.stages.push_back(std::move(all));
  }
  cfg.curriculum.validate();
  for (const auto& stage : cfg.curriculum.stages) {
    bool any = false;
    for (const auto& t : tasks) any |= stage.allowed.count(t.difficulty) != 0;
    if (!any) throw ValidationError("simulate: a curriculum stage admits no tasks");
  }

  std::vector<PolicyParams> policies(tasks.size());
  for (auto& p : policies) p.log_sigma = std::log(cfg.sigma0);
  Rng rng(cfg.seed);
  const double log_sigma_floor = std::log(cfg.sigma_floor);
  const double log_sigma_max = std::log(cfg.sigma_max);

  TrainingLog log;
  for (int step = 0; step < cfg.steps; ++step) {
    const auto& stage = stage_for_step(cfg.curriculum, step);
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if (stage.allowed.count(tasks[i].difficulty)) eligible.push_back(i);

    double reward_sum = 0.0;
    double entropy_sum = 0.0;
    std::vector<detail::TaskBatch> survivors;
    for (std::size_t i : eligible) {
      const auto& policy = policies[i];
      double sigma = policy.sigma();
      detail::TaskBatch batch;
      batch.task_index = i;
      batch.group.task_id = tasks[i].task_id;
      batch.group.target = tasks[i].target;
      for (int k = 0; k < cfg.g; ++k) {
        double x = policy.mu_x + sigma * rng.gaussian();
        double y = policy.mu_y + sigma * rng.gaussian();
        Rollout r;
        r.prediction = {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)};
        r.logprob_new = {detail::gaussian_logpdf(x, policy.mu_x, policy.log_sigma),
                         detail::gaussian_logpdf(y, policy.mu_y, policy.log_sigma)};
        r.logprob_old = r.logprob_new;
        double reward = binary_reward(r.prediction, tasks[i].target);
        batch.group.rollouts.push_back(std::move(r));
        batch.group.rewards.push_back(reward);
        batch.raw.emplace_back(x, y);
        batch.passes += reward > 0.5 ? 1 : 0;
        reward_sum += reward;
      }
      entropy_sum += policy.entropy();
      if (pass_rate_filter(batch.passes, cfg.g, cfg.curriculum.pass_rate)) {
        batch.group.advantages = group_advantages(batch.group.rewards);
        survivors.push_back(std::move(batch));
      }
    }

    LogRow row;
    row.step = step;
    row.mean_reward = reward_sum / (static_cast<double>(eligible.size()) * cfg.g);
    row.policy_entropy = entropy_sum / static_cast<double>(eligible.size());

    if (!survivors.empty()) {
      // The objective is separable across groups, so the central difference
      // for one task's parameter only needs that task's surrogate.
      double group_count = static_cast<double>(survivors.size());
      for (const auto& batch : survivors) {
        PolicyParams& p = policies[batch.task_index];
        auto grad_of = [&](auto bump) {
          PolicyParams hi = p, lo = p;
          bump(hi, cfg.fd_delta);
          bump(lo, -cfg.fd_delta);
          return (detail::batch_surrogate(batch, hi, cfg.epsilon) -
                  detail::batch_surrogate(batch, lo, cfg.epsilon)) /
                 (2.0 * cfg.fd_delta * group_count);
        };
        auto clip_step = [&](double g) {
          return std::clamp(cfg.lr * g, -cfg.max_step, cfg.max_step);
        };
        double g_mu_x = grad_of([](PolicyParams& q, double d) { q.mu_x += d; });
        double g_mu_y = grad_of([](PolicyParams& q, double d) { q.mu_y += d; });
        double g_ls = grad_of([](PolicyParams& q, double d) { q.log_sigma += d; });
        p.mu_x = std::clamp(p.mu_x + clip_step(g_mu_x), 0.0, 1.0);
        p.mu_y = std::clamp(p.mu_y + clip_step(g_mu_y), 0.0, 1.0);
        p.log_sigma =
            std::clamp(p.log_sigma + clip_step(g_ls), log_sigma_floor, log_sigma_max);
      }
      // Logged objective is the surrogate re-evaluated at the updated
      // parameters; at the sampling parameters it is identically zero.
      double post = 0.0;
      for (const auto& batch : survivors)
        post += detail::batch_surrogate(batch, policies[batch.task_index], cfg.epsilon);
      row.objective = post / group_count;
    }
    log.rows.push_back(row);
  }
  return log;
}

}  // namespace forge
