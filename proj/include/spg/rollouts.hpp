#pragma once

// Data-parallel sampling kernels. Each has a serial reference path and an OpenMP
// path; work item i always draws from make_stream(seed, stream, i) and partial
// results are reduced in index order, so both paths return bit-identical output.

#include <cstdint>
#include <span>
#include <vector>

#include "spg/advantage.hpp"
#include "spg/policy.hpp"
#include "spg/search_env.hpp"

namespace spg {

enum class Exec { Serial, OpenMP };

struct RolloutRequest {
  const EnvSpec* spec = nullptr;
  std::int64_t prompt_id = 0;
};

std::vector<Trajectory> collect_rollouts(std::span<const RolloutRequest> requests,
                                         const TabularPolicy& policy, std::uint64_t seed,
                                         std::uint64_t stream, Exec exec = Exec::Serial);

// Sample mean and standard error of the batch gradient estimator over
// independent single-prompt batches of size `batch_size`.
struct MonteCarloGradient {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t batches = 0;
};

MonteCarloGradient monte_carlo_gradient(const EnvSpec& spec, const TabularPolicy& policy,
                                        std::size_t batch_size, std::size_t batches,
                                        Estimator estimator, const AdvantageOptions& options,
                                        std::uint64_t seed, Exec exec = Exec::Serial);

// Empirical stratum frequencies and conditional mean rewards from single rollouts.
struct MonteCarloStratum {
  int search_count = 0;
  double frequency = 0.0;
  double frequency_se = 0.0;
  double mean_reward = 0.0;
  double mean_reward_se = 0.0;
  std::size_t count = 0;
};

std::vector<MonteCarloStratum> monte_carlo_strata(const EnvSpec& spec,
                                                  const TabularPolicy& policy,
                                                  std::size_t samples, std::uint64_t seed,
                                                  Exec exec = Exec::Serial);

// Exact expectation of the batch gradient estimator over i.i.d. batches of size
// `batch_size`, by summing over every ordered K-tuple of the trajectory law.
std::vector<double> expected_batch_gradient(const EnvSpec& spec, const TabularPolicy& policy,
                                            std::size_t batch_size, Estimator estimator,
                                            const AdvantageOptions& options = {});

}  // namespace spg
