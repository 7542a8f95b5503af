#include "spg/search_env.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "spg/error.hpp"
#include "spg/variance.hpp"

namespace spg {

namespace {

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void EnvSpec::validate() const {
  if (max_turns < 1) throw ValidationError("max_turns must be >= 1");
  if (hops < 1) throw ValidationError("hops must be >= 1");
  if (!is_prob(clue_prob) || !is_prob(p_correct_with_clues) || !is_prob(p_guess_base) ||
      !is_prob(p_guess_per_clue)) {
    throw ValidationError("env probabilities must lie in [0, 1]");
  }
  if (p_guess_base + p_guess_per_clue * (hops - 1) > p_correct_with_clues + 1e-12) {
    throw ValidationError(
        "p_guess_base + p_guess_per_clue * (hops - 1) must not exceed p_correct_with_clues");
  }
  if (!std::isfinite(reward_correct) || !std::isfinite(reward_wrong)) {
    throw ValidationError("rewards must be finite");
  }
}

double answer_success_prob(const EnvSpec& spec, int clues) {
  if (clues >= spec.hops) return spec.p_correct_with_clues;
  return std::min(1.0, spec.p_guess_base + spec.p_guess_per_clue * clues);
}

StepResult step(const EnvSpec& spec, const EnvState& state, Action action, bool outcome) {
  if (state.terminated) throw UsageError("step: episode already terminated");
  if (action == Action::Search && state.turn >= spec.max_turns - 1) {
    throw UsageError("step: SEARCH is not allowed on the final turn");
  }
  StepResult r;
  r.outcome = outcome;
  r.state = state;
  if (action == Action::Search) {
    r.state.turn += 1;
    r.state.clues += outcome ? 1 : 0;
  } else {
    r.state.terminated = true;
    r.reward = outcome ? spec.reward_correct : spec.reward_wrong;
  }
  return r;
}

StepResult step(const EnvSpec& spec, const EnvState& state, Action action, Rng& rng) {
  const double p = action == Action::Search ? spec.clue_prob
                                            : answer_success_prob(spec, state.clues);
  return step(spec, state, action, bernoulli(rng, p));
}

Trajectory rollout(const EnvSpec& spec, const PolicyFn& policy, std::int64_t prompt_id,
                   Rng& rng) {
  Trajectory tr;
  tr.prompt_id = prompt_id;
  EnvState s;
  while (!s.terminated) {
    Action a = Action::Answer;
    if (is_choice_state(spec, s)) {
      const auto probs = policy(s);
      a = uniform01(rng) < probs.search ? Action::Search : Action::Answer;
      tr.log_prob += std::log(probs.of(a));
    }
    const auto res = step(spec, s, a, rng);
    tr.actions.push_back(a);
    tr.observations.push_back(res.outcome);
    if (a == Action::Search) ++tr.search_count;
    if (res.reward) tr.reward = *res.reward;
    s = res.state;
  }
  return tr;
}

double TrajectoryLaw::total_probability() const {
  double t = 0.0;
  for (const auto& w : support) t += w.probability;
  return t;
}

namespace {

void expand(const EnvSpec& spec, const PolicyFn& policy, const EnvState& s, Trajectory& prefix,
            double prob, std::size_t cap, TrajectoryLaw& law) {
  auto branch = [&](Action a, double action_prob) {
    if (action_prob <= 0.0) return;
    const double p_outcome = a == Action::Search ? spec.clue_prob
                                                 : answer_success_prob(spec, s.clues);
    const double log_a = is_choice_state(spec, s) ? std::log(action_prob) : 0.0;
    for (bool outcome : {true, false}) {
      const double q = outcome ? p_outcome : 1.0 - p_outcome;
      if (q <= 0.0) continue;
      const auto res = step(spec, s, a, outcome);
      prefix.actions.push_back(a);
      prefix.observations.push_back(outcome);
      prefix.log_prob += log_a;
      if (a == Action::Search) ++prefix.search_count;
      if (res.reward) {
        if (law.support.size() >= cap) {
          throw SupportCapError("enumerate: support exceeds cap of " + std::to_string(cap) +
                                " trajectories; use a smaller max_turns");
        }
        Trajectory done = prefix;
        done.reward = *res.reward;
        law.support.push_back({std::move(done), prob * action_prob * q});
      } else {
        expand(spec, policy, res.state, prefix, prob * action_prob * q, cap, law);
      }
      if (a == Action::Search) --prefix.search_count;
      prefix.log_prob -= log_a;
      prefix.actions.pop_back();
      prefix.observations.pop_back();
    }
  };
  if (is_choice_state(spec, s)) {
    const auto probs = policy(s);
    branch(Action::Search, probs.search);
    branch(Action::Answer, probs.answer);
  } else {
    branch(Action::Answer, 1.0);
  }
}

}  // namespace

TrajectoryLaw enumerate(const EnvSpec& spec, const PolicyFn& policy, std::size_t cap) {
  spec.validate();
  TrajectoryLaw law;
  Trajectory prefix;
  expand(spec, policy, EnvState{}, prefix, 1.0, cap, law);
  return law;
}

std::vector<StratumDistribution> stratum_distribution(const TrajectoryLaw& law) {
  std::map<int, StratumDistribution> acc;
  for (const auto& w : law.support) {
    auto& d = acc[w.trajectory.search_count];
    d.search_count = w.trajectory.search_count;
    d.probability += w.probability;
    d.mean += w.probability * w.trajectory.reward;
  }
  for (auto& [k, d] : acc) d.mean /= d.probability;
  for (const auto& w : law.support) {
    auto& d = acc[w.trajectory.search_count];
    const double dev = w.trajectory.reward - d.mean;
    d.std += w.probability * dev * dev;
  }
  std::vector<StratumDistribution> out;
  for (auto& [k, d] : acc) {
    if (d.probability <= 0.0) continue;
    d.std = std::sqrt(d.std / d.probability);
    out.push_back(d);
  }
  return out;
}

double expected_reward(const TrajectoryLaw& law) {
  double j = 0.0;
  for (const auto& w : law.support) j += w.probability * w.trajectory.reward;
  return j;
}

double expected_search_count(const TrajectoryLaw& law) {
  double j = 0.0;
  for (const auto& w : law.support) j += w.probability * w.trajectory.search_count;
  return j;
}

RewardLaw reward_law(const TrajectoryLaw& law) {
  std::map<int, std::map<double, double>> joint;
  std::map<int, double> pk;
  for (const auto& w : law.support) {
    joint[w.trajectory.search_count][w.trajectory.reward] += w.probability;
    pk[w.trajectory.search_count] += w.probability;
  }
  RewardLaw out;
  for (const auto& [k, rewards] : joint) {
    if (pk[k] <= 0.0) continue;
    StratumRewardLaw s;
    s.key = static_cast<std::uint32_t>(k);
    s.probability = pk[k];
    for (const auto& [r, p] : rewards) s.outcomes.emplace_back(r, p / pk[k]);
    out.strata.push_back(std::move(s));
  }
  return out;
}

}  // namespace spg
