#pragma once

// Variance decompositions of advantage vectors and exact moment tables for the
// normalized advantages.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "spg/advantage.hpp"

namespace spg {

// Mean of squared deviations from the mean (divisor K). Throws on empty input.
double empirical_variance(std::span<const double> values);

struct VarianceReport {
  double var_global = 0.0;
  double var_stratified = 0.0;
  double var_san = 0.0;
  double between_stratum = 0.0;       // (1/K) sum_k n_k (mean_k - mean_global)^2
  double normalization_effect = 0.0;  // (1/K) sum_k n_k std_k^2 (1 - 1/(std_k + eps)^2)

  // var_global - var_stratified - between_stratum
  double stratified_residual() const { return var_global - var_stratified - between_stratum; }
  // (var_global - var_san) - (between_stratum + normalization_effect)
  double san_residual() const {
    return (var_global - var_san) - (between_stratum + normalization_effect);
  }
};

// var_global and var_stratified are measured on the advantage vectors themselves;
// between_stratum comes from the stratum means. The global reference of each stratum
// is its partition scope (its prompt, or the whole batch).
VarianceReport variance_decomposition(const RewardBatch& batch,
                                      const StratumPartition& partition);

// Adds var_san (measured on the SAN vector) and the normalization effect.
VarianceReport san_variance_decomposition(const RewardBatch& batch,
                                          const StratumPartition& partition,
                                          double epsilon = kDefaultEpsilon);

// Exact law of the reward conditional on each stratum. Only strata with positive
// probability are listed.
struct StratumRewardLaw {
  std::uint32_t key = 0;
  double probability = 0.0;                       // p_k
  std::vector<std::pair<double, double>> outcomes;  // (reward, P(reward | k)), sums to 1
};

struct RewardLaw {
  std::vector<StratumRewardLaw> strata;
};

struct StratumMoments {
  std::uint32_t key = 0;
  double probability = 0.0;
  double mu = 0.0;     // E[R | k]
  double sigma = 0.0;  // sd(R | k)
  double mean_san = 0.0;
  double var_san = 0.0;
  double mean_gn = 0.0;
  double var_gn = 0.0;
};

struct MomentTable {
  std::vector<StratumMoments> strata;
  double mu = 0.0;
  double sigma = 0.0;
  double global_mean_san = 0.0;
  double global_var_san = 0.0;
  double global_mean_gn = 0.0;
  double global_var_gn = 0.0;
};

// Population SAN (R - mu_S)/sigma_S and GN (R - mu)/sigma moments, computed by
// summing over the law. Throws DivisionByZeroError when any stratum has sigma_k == 0, and ValidationError on a malformed law.
MomentTable moment_table(const RewardLaw& law);

// Same quantities estimated from `samples` draws of (S, R); the normalizing mu_k,
// sigma_k, mu and sigma remain the exact population values.
MomentTable moment_table_monte_carlo(const RewardLaw& law, std::size_t samples,
                                     std::uint64_t seed);

// Closed-form entries of the local/global moment comparison: conditional SAN mean 0
// and variance 1, conditional GN mean (mu_k - mu)/sigma and variance sigma_k^2/sigma^2,
// global means 0 and variances 1.
MomentTable moment_table_closed_form(const RewardLaw& law);

}  // namespace spg
