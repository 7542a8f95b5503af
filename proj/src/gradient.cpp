#include "spg/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "spg/error.hpp"

namespace spg {

RewardBatch to_reward_batch(std::span<const Trajectory> batch) {
  std::vector<RewardEntry> entries;
  entries.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    entries.push_back({static_cast<std::int64_t>(i), batch[i].prompt_id,
                       static_cast<std::uint32_t>(batch[i].search_count), batch[i].reward});
  }
  return RewardBatch(std::move(entries));
}

GradEstimate grad_estimate(std::span<const Trajectory> batch, const AdvantageVector& advantages,
                           const TabularPolicy& policy) {
  if (advantages.values.size() != batch.size()) {
    throw ValidationError("grad_estimate: advantages and batch differ in length");
  }
  GradEstimate g{std::vector<double>(policy.size(), 0.0), advantages.estimator, batch.size()};
  if (batch.empty()) return g;
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (advantages.values[i] == 0.0) continue;
    add_scaled_score(policy, batch[i], advantages.values[i] * inv_k, g.values);
  }
  return g;
}

GnGradientSplit gn_gradient_split(std::span<const Trajectory> batch, const TabularPolicy& policy,
                                  double epsilon, Scope scope) {
  const auto rewards = to_reward_batch(batch);
  const auto partition = stratify(rewards, Scope::PerPrompt);
  const auto san = adv_san(rewards, partition, epsilon);
  const auto parts = decompose_gn(rewards, partition, epsilon, scope);

  std::map<GroupKey, GnDecomposition> by_key;
  for (const auto& d : parts) by_key.emplace(d.key, d);

  GnGradientSplit out;
  out.san_part.assign(policy.size(), 0.0);
  out.offset_part.assign(policy.size(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(batch.size());
  for (const auto& [key, idx] : partition.groups) {
    const auto& d = by_key.at(key);
    for (auto i : idx) {
      add_scaled_score(policy, batch[i], d.scale * san.values[i] * inv_k, out.san_part);
      add_scaled_score(policy, batch[i], d.offset * inv_k, out.offset_part);
    }
  }
  out.gn = grad_estimate(batch, adv_gn(rewards, scope, epsilon), policy).values;
  return out;
}

std::vector<double> expected_score(const TabularPolicy& policy, const TrajectoryLaw& law) {
  std::vector<double> g(policy.size(), 0.0);
  for (const auto& w : law.support) add_scaled_score(policy, w.trajectory, w.probability, g);
  return g;
}

std::vector<double> expected_reward_gradient(const TabularPolicy& policy,
                                             const TrajectoryLaw& law) {
  std::vector<double> g(policy.size(), 0.0);
  for (const auto& w : law.support) {
    add_scaled_score(policy, w.trajectory, w.probability * w.trajectory.reward, g);
  }
  return g;
}

std::vector<StratumGradient> stratum_gradients(const TabularPolicy& policy,
                                               const TrajectoryLaw& law) {
  const auto dist = stratum_distribution(law);
  std::map<int, std::size_t> slot;
  std::vector<StratumGradient> out;
  for (const auto& d : dist) {
    slot[d.search_count] = out.size();
    out.push_back({d.search_count, d.probability, d.mean, d.std,
                   std::vector<double>(policy.size(), 0.0),
                   std::vector<double>(policy.size(), 0.0)});
  }
  // grad log p_k = E[score | S=k]
  for (const auto& w : law.support) {
    auto& s = out[slot.at(w.trajectory.search_count)];
    add_scaled_score(policy, w.trajectory, w.probability / s.probability,
                     s.grad_log_probability);
  }
  // grad mu_k = E[(R - mu_k) grad log p(tau | S=k) | S=k], with
  // grad log p(tau | S=k) = score(tau) - grad log p_k.
  std::vector<double> sc(policy.size());
  for (const auto& w : law.support) {
    auto& s = out[slot.at(w.trajectory.search_count)];
    const double weight = w.probability / s.probability * (w.trajectory.reward - s.mean);
    if (weight == 0.0) continue;
    std::fill(sc.begin(), sc.end(), 0.0);
    add_scaled_score(policy, w.trajectory, 1.0, sc);
    for (std::size_t j = 0; j < sc.size(); ++j) {
      s.grad_mean[j] += weight * (sc[j] - s.grad_log_probability[j]);
    }
  }
  return out;
}

namespace {

double stratum_denominator(double std, double epsilon, int key) {
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be non-negative");
  if (std + epsilon == 0.0) {
    throw DivisionByZeroError("stratum " + std::to_string(key) +
                              " has zero reward deviation and epsilon = 0");
  }
  return std + epsilon;
}

}  // namespace

GradEstimate population_san_gradient(const TabularPolicy& policy, const EnvSpec& spec,
                                     double epsilon) {
  const auto law = enumerate(spec, std::cref(policy));
  std::map<int, StratumDistribution> dist;
  for (const auto& d : stratum_distribution(law)) dist[d.search_count] = d;
  GradEstimate g{std::vector<double>(policy.size(), 0.0), Estimator::SAN, 0};
  for (const auto& w : law.support) {
    const auto& d = dist.at(w.trajectory.search_count);
    const double a = (w.trajectory.reward - d.mean) /
                     stratum_denominator(d.std, epsilon, d.search_count);
    add_scaled_score(policy, w.trajectory, w.probability * a, g.values);
  }
  return g;
}

GradEstimate weighted_stratum_gradient(const TabularPolicy& policy, const EnvSpec& spec,
                                       double epsilon) {
  const auto law = enumerate(spec, std::cref(policy));
  GradEstimate g{std::vector<double>(policy.size(), 0.0), Estimator::SAN, 0};
  for (const auto& s : stratum_gradients(policy, law)) {
    const double w = s.probability / stratum_denominator(s.std, epsilon, s.search_count);
    for (std::size_t j = 0; j < g.values.size(); ++j) g.values[j] += w * s.grad_mean[j];
  }
  return g;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double l2_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace spg
