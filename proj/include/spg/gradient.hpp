#pragma once

// Score-function gradient estimators and their exact population counterparts.

#include <span>
#include <vector>

#include "spg/advantage.hpp"
#include "spg/policy.hpp"
#include "spg/search_env.hpp"

namespace spg {

struct GradEstimate {
  std::vector<double> values;
  Estimator estimator = Estimator::Global;
  std::size_t batch_size = 0;
};

// Rewards of a batch of trajectories: trajectory id = position, stratum = search count.
RewardBatch to_reward_batch(std::span<const Trajectory> batch);

// (1/K) sum_i A_i score(tau_i). Throws ValidationError on a length mismatch.
GradEstimate grad_estimate(std::span<const Trajectory> batch, const AdvantageVector& advantages,
                           const TabularPolicy& policy);

// GN gradient split into a rescaled-SAN part and the cross-stratum offset part:
//   g_GN = (1/K) sum alpha_k A_SAN score + (1/K) sum Delta_k score.
struct GnGradientSplit {
  std::vector<double> san_part;
  std::vector<double> offset_part;
  std::vector<double> gn;  // grad_estimate with A_GN, computed directly
};

GnGradientSplit gn_gradient_split(std::span<const Trajectory> batch, const TabularPolicy& policy,
                                  double epsilon = kDefaultEpsilon,
                                  Scope scope = Scope::PerPrompt);

// E[score] under the law.
std::vector<double> expected_score(const TabularPolicy& policy, const TrajectoryLaw& law);

// Gradient of J = E[R]: E[R score].
std::vector<double> expected_reward_gradient(const TabularPolicy& policy,
                                             const TrajectoryLaw& law);

struct StratumGradient {
  int search_count = 0;
  double probability = 0.0;
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> grad_log_probability;  // E[score | S=k]
  std::vector<double> grad_mean;             // E[(R - mu_k) (score - grad log p_k) | S=k]
};

// Per-stratum gradients through the conditional score identity.
std::vector<StratumGradient> stratum_gradients(const TabularPolicy& policy,
                                               const TrajectoryLaw& law);

// E[A_SAN(tau) score(tau)] with A_SAN built from the population mu_k, sigma_k.
// Throws DivisionByZeroError if sigma_k == 0 for a reachable stratum and epsilon == 0.
GradEstimate population_san_gradient(const TabularPolicy& policy, const EnvSpec& spec,
                                     double epsilon = kDefaultEpsilon);

// sum_k p_k / (sigma_k + epsilon) * grad mu_k.
GradEstimate weighted_stratum_gradient(const TabularPolicy& policy, const EnvSpec& spec,
                                       double epsilon = kDefaultEpsilon);

double max_abs_diff(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);
double l2_norm(std::span<const double> a);

}  // namespace spg
