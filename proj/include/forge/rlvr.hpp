#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "forge/entropy.hpp"
#include "forge/error.hpp"
#include "forge/geometry.hpp"

namespace forge {

/// Verifiable reward: 1 iff the predicted point lies inside the annotated
/// box, all four edges inclusive.
inline double binary_reward(NormPoint p, const NormBox& box) {
  return (box.x0 <= p.x && p.x <= box.x1 && box.y0 <= p.y && p.y <= box.y1) ? 1.0 : 0.0;
}

/// Group-normalized advantages: (R_i - mean) / population std. A zero-variance
/// group (all rewards equal) has no preference ordering and contributes no
/// gradient, so every advantage is defined as 0 rather than dividing by an
/// epsilon.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
  const std::size_t g = rewards.size();
  if (g < 2)
    throw ValidationError("group_advantages: group size must be >= 2, got " + std::to_string(g));
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);
  if (var == 0.0) return std::vector<double>(g, 0.0);
  double std_dev = std::sqrt(var);
  std::vector<double> out;
  out.reserve(g);
  for (double r : rewards) out.push_back((r - mean) / std_dev);
  return out;
}

/// One sampled response: a predicted point plus per-token log-probabilities
/// under the current and the behavior policy.
struct Rollout {
  NormPoint prediction;
  std::vector<double> logprob_new;
  std::vector<double> logprob_old;

  std::size_t token_count() const { return logprob_new.size(); }
};

/// G rollouts for one task with their terminal rewards and the advantages
/// broadcast to every token.
struct GroupRollout {
  std::string task_id;
  NormBox target;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;

  void validate() const {
    if (rollouts.size() != rewards.size() || rollouts.size() != advantages.size())
      throw ValidationError("group '" + task_id + "': rollouts/rewards/advantages sizes differ");
    for (const auto& r : rollouts) {
      if (r.logprob_new.size() != r.logprob_old.size())
        throw ValidationError("group '" + task_id + "': logprob lists have different lengths");
      if (r.logprob_new.empty())
        throw ValidationError("group '" + task_id + "': rollout has no tokens");
    }
    for (double r : rewards)
      if (r != 0.0 && r != 1.0)
        throw ValidationError("group '" + task_id + "': rewards must be binary");
  }
};

/// Optional regularizer evaluated per rollout and subtracted from the
/// objective with the group's token normalization. Unset by default: the
/// clipped surrogate as defined carries no KL term.
using KlHook = std::function<double(const Rollout&)>;

namespace detail {

inline double group_surrogate(const GroupRollout& g, double epsilon, const KlHook& kl) {
  double total = 0.0;
  long long tokens = 0;
  for (const auto& r : g.rollouts) tokens += static_cast<long long>(r.token_count());
  for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
    const auto& r = g.rollouts[i];
    double adv = g.advantages[i];
    for (std::size_t t = 0; t < r.logprob_new.size(); ++t) {
      double ratio = std::exp(r.logprob_new[t] - r.logprob_old[t]);
      double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
      total += std::min(ratio * adv, clipped * adv);
    }
    if (kl) total -= kl(r);
  }
  return total / static_cast<double>(tokens);
}

}  // namespace detail

/// Clipped-surrogate objective. Per token, with ratio r = exp(lp_new-lp_old):
/// min(r*A, clip(r, 1-eps, 1+eps)*A); each group is normalized by its total
/// token count, and the objective is the mean over groups.
inline double grpo_objective(const std::vector<GroupRollout>& groups, double epsilon,
                             const KlHook& kl = nullptr) {
  if (!(epsilon > 0.0))
    throw ValidationError("grpo_objective: epsilon must be positive, got " +
                          std::to_string(epsilon));
  if (groups.empty()) throw ValidationError("grpo_objective: no groups");
  double sum = 0.0;
  for (const auto& g : groups) {
    g.validate();
    sum += detail::group_surrogate(g, epsilon, kl);
  }
  return sum / static_cast<double>(groups.size());
}

/// Rollout pass-rate window for task filtering: strictly above `low`, at most
/// `high`. The defaults (0, 0.75] drop all-fail tasks (zero gradient) and
/// too-easy tasks above 75%, keeping 1..6 passes of 8.
struct PassRateConfig {
  double low = 0.0;
  double high = 0.75;

  void validate() const {
    if (!(0.0 <= low && low < high && high <= 1.0))
      throw ValidationError("pass-rate window requires 0 <= low < high <= 1");
  }
};

inline bool pass_rate_filter(int passes, int k, const PassRateConfig& cfg = {}) {
  cfg.validate();
  if (k < 1) throw ValidationError("pass_rate_filter: k must be >= 1");
  if (passes < 0 || passes > k)
    throw ValidationError("pass_rate_filter: passes must be in [0, k]");
  double rate = static_cast<double>(passes) / static_cast<double>(k);
  return cfg.low < rate && rate <= cfg.high;
}

/// One curriculum stage: which difficulty buckets may be sampled, for how
/// many steps.
struct CurriculumStage {
  std::set<Bucket> allowed;
  int steps = 0;
};

struct CurriculumConfig {
  std::vector<CurriculumStage> stages;
  PassRateConfig pass_rate;

  void validate() const {
    if (stages.empty()) throw ValidationError("curriculum: at least one stage required");
    for (const auto& s : stages) {
      if (s.allowed.empty()) throw ValidationError("curriculum: stage allows no buckets");
      if (s.steps < 1) throw ValidationError("curriculum: stage steps must be >= 1");
    }
    pass_rate.validate();
  }
};

/// Stage active at a 0-based step; steps past the total budget stay on the
/// final stage.
inline const CurriculumStage& stage_for_step(const CurriculumConfig& cfg, int step) {
  cfg.validate();
  int consumed = 0;
  for (const auto& s : cfg.stages) {
    consumed += s.steps;
    if (step < consumed) return s;
  }
  return cfg.stages.back();
}

/// Parses a stage list like "easy:50,easy+medium:50,all:100". Bucket names
/// join with '+'; "all" admits every bucket.
inline std::vector<CurriculumStage> curriculum_from_string(const std::string& text) {
  std::vector<CurriculumStage> stages;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    std::string part = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (part.empty()) continue;
    auto colon = part.find(':');
    if (colon == std::string::npos)
      throw ValidationError("curriculum stage '" + part + "' must look like buckets:steps");
    CurriculumStage stage;
    std::string buckets = part.substr(0, colon);
    std::size_t b = 0;
    while (b <= buckets.size()) {
      auto plus = buckets.find('+', b);
      std::string name = buckets.substr(b, plus == std::string::npos ? plus : plus - b);
      b = plus == std::string::npos ? buckets.size() + 1 : plus + 1;
      if (name.empty()) continue;
      if (name == "all") {
        stage.allowed = {Bucket::Easy, Bucket::Medium, Bucket::Hard};
      } else {
        stage.allowed.insert(bucket_from_string(name));
      }
    }
    try {
      stage.steps = std::stoi(part.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("curriculum stage '" + part + "' has a non-numeric step count");
    }
    if (stage.allowed.empty() || stage.steps < 1)
      throw ValidationError("curriculum stage '" + part + "' is empty or has no steps");
    stages.push_back(std::move(stage));
  }
  if (stages.empty()) throw ValidationError("curriculum string contains no stages");
  return stages;
}

}  // namespace forge
