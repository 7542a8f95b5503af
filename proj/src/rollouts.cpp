#include "spg/rollouts.hpp"

#include <cmath>
#include <functional>
#include <map>

#include <omp.h>

#include "spg/error.hpp"
#include "spg/gradient.hpp"
#include "spg/random.hpp"

namespace spg {

std::vector<Trajectory> collect_rollouts(std::span<const RolloutRequest> requests,
                                         const TabularPolicy& policy, std::uint64_t seed,
                                         std::uint64_t stream, Exec exec) {
  for (const auto& r : requests) {
    if (r.spec == nullptr) throw ValidationError("collect_rollouts: null env spec");
    if (r.spec->max_turns != policy.max_turns()) {
      throw ValidationError("collect_rollouts: policy and env disagree on max_turns");
    }
  }
  std::vector<Trajectory> out(requests.size());
  const PolicyFn fn = std::cref(policy);
  const auto n = static_cast<std::int64_t>(requests.size());
  auto body = [&](std::int64_t i) {
    Rng rng = make_stream(seed, stream, static_cast<std::uint64_t>(i));
    out[i] = rollout(*requests[i].spec, fn, requests[i].prompt_id, rng);
  };
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) body(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) body(i);
  }
  return out;
}

MonteCarloGradient monte_carlo_gradient(const EnvSpec& spec, const TabularPolicy& policy,
                                        std::size_t batch_size, std::size_t batches,
                                        Estimator estimator, const AdvantageOptions& options,
                                        std::uint64_t seed, Exec exec) {
  spec.validate();
  if (batch_size == 0 || batches < 2) {
    throw ValidationError("monte_carlo_gradient: need batch_size >= 1 and batches >= 2");
  }
  if (spec.max_turns != policy.max_turns()) {
    throw ValidationError("monte_carlo_gradient: policy and env disagree on max_turns");
  }
  const std::size_t dim = policy.size();
  std::vector<double> per_batch(batches * dim, 0.0);
  const PolicyFn fn = std::cref(policy);
  const auto nb = static_cast<std::int64_t>(batches);

  auto body = [&](std::int64_t b) {
    std::vector<Trajectory> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(b), i);
      batch.push_back(rollout(spec, fn, 0, rng));
    }
    const auto adv = compute_advantages(to_reward_batch(batch), estimator, options);
    const auto g = grad_estimate(batch, adv, policy);
    std::copy(g.values.begin(), g.values.end(), per_batch.begin() + b * static_cast<std::int64_t>(dim));
  };
  if (exec == Exec::OpenMP) {
    // First batch runs serially so configuration errors surface outside the parallel region.
    body(0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 1; b < nb; ++b) body(b);
  } else {
    for (std::int64_t b = 0; b < nb; ++b) body(b);
  }

  MonteCarloGradient mc;
  mc.batches = batches;
  mc.mean.assign(dim, 0.0);
  mc.std_error.assign(dim, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t j = 0; j < dim; ++j) mc.mean[j] += per_batch[b * dim + j];
  }
  const double n = static_cast<double>(batches);
  for (auto& m : mc.mean) m /= n;
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = per_batch[b * dim + j] - mc.mean[j];
      mc.std_error[j] += d * d;
    }
  }
  for (auto& s : mc.std_error) s = std::sqrt(s / (n - 1.0) / n);
  return mc;
}

std::vector<MonteCarloStratum> monte_carlo_strata(const EnvSpec& spec,
                                                  const TabularPolicy& policy,
                                                  std::size_t samples, std::uint64_t seed,
                                                  Exec exec) {
  if (samples < 2) throw ValidationError("monte_carlo_strata: need at least 2 samples");
  std::vector<RolloutRequest> req(samples, RolloutRequest{&spec, 0});
  const auto trajectories = collect_rollouts(req, policy, seed, 0, exec);
  std::map<int, std::pair<std::size_t, std::vector<double>>> acc;
  for (const auto& t : trajectories) {
    auto& a = acc[t.search_count];
    a.first += 1;
    a.second.push_back(t.reward);
  }
  std::vector<MonteCarloStratum> out;
  const double n = static_cast<double>(samples);
  for (const auto& [k, a] : acc) {
    MonteCarloStratum s;
    s.search_count = k;
    s.count = a.first;
    s.frequency = static_cast<double>(a.first) / n;
    s.frequency_se = std::sqrt(s.frequency * (1.0 - s.frequency) / n);
    double sum = 0.0;
    for (double r : a.second) sum += r;
    s.mean_reward = sum / static_cast<double>(a.first);
    double ss = 0.0;
    for (double r : a.second) ss += (r - s.mean_reward) * (r - s.mean_reward);
    if (a.first > 1) {
      s.mean_reward_se = std::sqrt(ss / static_cast<double>(a.first - 1) /
                                   static_cast<double>(a.first));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> expected_batch_gradient(const EnvSpec& spec, const TabularPolicy& policy,
                                            std::size_t batch_size, Estimator estimator,
                                            const AdvantageOptions& options) {
  if (batch_size == 0) throw ValidationError("expected_batch_gradient: batch_size must be >= 1");
  const auto law = enumerate(spec, std::cref(policy));
  const std::size_t m = law.support.size();
  double tuples = 1.0;
  for (std::size_t i = 0; i < batch_size; ++i) tuples *= static_cast<double>(m);
  if (tuples > 5e7) throw SupportCapError("expected_batch_gradient: too many batch tuples");

  std::vector<std::vector<double>> scores;
  scores.reserve(m);
  for (const auto& w : law.support) scores.push_back(score(policy, w.trajectory));

  std::vector<double> total(policy.size(), 0.0);
  std::vector<std::size_t> pick(batch_size, 0);
  std::vector<RewardEntry> entries(batch_size);
  const double inv_k = 1.0 / static_cast<double>(batch_size);
  while (true) {
    double prob = 1.0;
    for (std::size_t i = 0; i < batch_size; ++i) {
      const auto& w = law.support[pick[i]];
      prob *= w.probability;
      entries[i] = {static_cast<std::int64_t>(i), 0,
                    static_cast<std::uint32_t>(w.trajectory.search_count), w.trajectory.reward};
    }
    const auto adv = compute_advantages(RewardBatch(entries), estimator, options);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const double w = prob * adv.values[i] * inv_k;
      if (w == 0.0) continue;
      const auto& s = scores[pick[i]];
      for (std::size_t j = 0; j < total.size(); ++j) total[j] += w * s[j];
    }
    std::size_t pos = 0;
    while (pos < batch_size && ++pick[pos] == m) pick[pos++] = 0;
    if (pos == batch_size) break;
  }
  return total;
}

}  // namespace spg
