#pragma once

// Plain gradient ascent on the tabular policy with a configurable advantage
// estimator: sample P prompts x G rollouts, compute advantages per prompt group,
// step theta <- theta + lr * g.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spg/advantage.hpp"
#include "spg/policy.hpp"
#include "spg/rollouts.hpp"
#include "spg/search_env.hpp"

namespace spg {

struct TrainConfig {
  // Prompt variants; slot p of iteration t uses variant (t * P + p) mod size.
  std::vector<EnvSpec> prompts{EnvSpec{}};
  Estimator estimator = Estimator::Blend;
  double alpha = kDefaultAlpha;
  double epsilon = kDefaultEpsilon;
  Scope gn_scope = Scope::PerPrompt;
  int prompts_per_step = 4;
  int rollouts_per_prompt = 8;
  double lr = 0.5;
  int iters = 500;
  std::uint64_t seed = 0;
  double init_search_bias = 0.0;
  double temperature = 1.0;
  Exec exec = Exec::Serial;

  // Throws ValidationError.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double expected_reward = 0.0;    // exact, after the update
  double mean_search_count = 0.0;  // exact, after the update
  double batch_reward_mean = 0.0;
  double grad_norm = 0.0;
  std::vector<double> stratum_occupancy;  // batch fraction per search count 0..T-1
};

struct TrainHistory {
  std::vector<IterationRecord> records;
  TabularPolicy initial_policy;
  TabularPolicy final_policy;
};

// Exact objective averaged over the prompt variants.
double mean_expected_reward(const std::vector<EnvSpec>& prompts, const TabularPolicy& policy);
double mean_search_count(const std::vector<EnvSpec>& prompts, const TabularPolicy& policy);

// Called with each sampled batch before the update.
using BatchObserver = std::function<void(int iter, std::span<const Trajectory> batch)>;

TrainHistory train(const TrainConfig& config, const BatchObserver& observer = {});

}  // namespace spg
