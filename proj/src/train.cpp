#include "spg/train.hpp"

#include <cmath>
#include <functional>

#include "spg/error.hpp"
#include "spg/gradient.hpp"

namespace spg {

void TrainConfig::validate() const {
  if (prompts.empty()) throw ValidationError("train: at least one prompt variant is required");
  for (const auto& p : prompts) {
    p.validate();
    if (p.max_turns != prompts.front().max_turns) {
      throw ValidationError("train: prompt variants must share max_turns");
    }
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("train: alpha must lie in [0, 1]");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("train: epsilon must be non-negative");
  }
  if (prompts_per_step < 1) throw ValidationError("train: prompts_per_step must be >= 1");
  if (rollouts_per_prompt < 1) throw ValidationError("train: rollouts_per_prompt must be >= 1");
  if (!std::isfinite(lr) || lr < 0.0) throw ValidationError("train: lr must be finite and >= 0");
  if (iters < 0) throw ValidationError("train: iters must be >= 0");
  if (!std::isfinite(init_search_bias)) throw ValidationError("train: bad init_search_bias");
  if (!(temperature > 0.0)) throw ValidationError("train: temperature must be positive");
  if (epsilon == 0.0 && estimator != Estimator::Global && estimator != Estimator::Stratified) {
    throw ValidationError("train: normalized estimators need epsilon > 0");
  }
}

double mean_expected_reward(const std::vector<EnvSpec>& prompts, const TabularPolicy& policy) {
  double j = 0.0;
  for (const auto& p : prompts) j += expected_reward(enumerate(p, std::cref(policy)));
  return j / static_cast<double>(prompts.size());
}

double mean_search_count(const std::vector<EnvSpec>& prompts, const TabularPolicy& policy) {
  double s = 0.0;
  for (const auto& p : prompts) s += expected_search_count(enumerate(p, std::cref(policy)));
  return s / static_cast<double>(prompts.size());
}

TrainHistory train(const TrainConfig& config, const BatchObserver& observer) {
  config.validate();
  const int turns = config.prompts.front().max_turns;
  TabularPolicy policy =
      TabularPolicy::with_search_bias(turns, config.init_search_bias, config.temperature);

  TrainHistory history;
  history.initial_policy = policy;
  history.records.reserve(static_cast<std::size_t>(config.iters));

  const auto P = static_cast<std::size_t>(config.prompts_per_step);
  const auto G = static_cast<std::size_t>(config.rollouts_per_prompt);
  AdvantageOptions opts;
  opts.alpha = config.alpha;
  opts.epsilon = config.epsilon;
  opts.gn_scope = config.gn_scope;
  opts.stratum_scope = Scope::PerPrompt;

  std::vector<RolloutRequest> requests(P * G);
  for (int it = 0; it < config.iters; ++it) {
    for (std::size_t p = 0; p < P; ++p) {
      const auto variant = (static_cast<std::size_t>(it) * P + p) % config.prompts.size();
      for (std::size_t g = 0; g < G; ++g) {
        requests[p * G + g] = {&config.prompts[variant], static_cast<std::int64_t>(p)};
      }
    }
    const auto batch = collect_rollouts(requests, policy, config.seed,
                                        static_cast<std::uint64_t>(it), config.exec);
    if (observer) observer(it, batch);
    const auto rewards = to_reward_batch(batch);
    const auto adv = compute_advantages(rewards, config.estimator, opts);
    const auto grad = grad_estimate(batch, adv, policy);

    auto theta = policy.theta();
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += config.lr * grad.values[j];

    IterationRecord rec;
    rec.iter = it;
    rec.grad_norm = l2_norm(grad.values);
    rec.stratum_occupancy.assign(static_cast<std::size_t>(turns), 0.0);
    double sum = 0.0;
    for (const auto& t : batch) {
      sum += t.reward;
      rec.stratum_occupancy[static_cast<std::size_t>(t.search_count)] += 1.0;
    }
    const double k = static_cast<double>(batch.size());
    rec.batch_reward_mean = sum / k;
    for (auto& o : rec.stratum_occupancy) o /= k;
    rec.expected_reward = mean_expected_reward(config.prompts, policy);
    rec.mean_search_count = mean_search_count(config.prompts, policy);
    history.records.push_back(std::move(rec));
  }
  history.final_policy = policy;
  return history;
}

}  // namespace spg
