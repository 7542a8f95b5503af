#pragma once

// SearchWorld: a bounded-turn question answering episode. At each turn the agent
// either SEARCHes (finding a clue with probability clue_prob) or ANSWERs. With at
// least `hops` clues an answer is correct with probability p_correct_with_clues,
// otherwise with probability min(1, p_guess_base + p_guess_per_clue * clues). The
// last turn must answer, so every episode ends with a reward.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "spg/random.hpp"

namespace spg {

struct EnvSpec {
  int max_turns = 4;
  int hops = 2;
  double clue_prob = 0.7;
  double p_correct_with_clues = 0.9;
  double p_guess_base = 0.1;
  double p_guess_per_clue = 0.2;
  double reward_correct = 1.0;
  double reward_wrong = 0.0;

  // Throws ValidationError.
  void validate() const;
  bool operator==(const EnvSpec&) const = default;
};

struct EnvState {
  int turn = 0;
  int clues = 0;
  bool terminated = false;
  bool operator==(const EnvState&) const = default;
};

enum class Action : std::uint8_t { Search = 0, Answer = 1 };
inline constexpr std::size_t kNumActions = 2;

struct ActionProbs {
  double search = 0.5;
  double answer = 0.5;
  double of(Action a) const { return a == Action::Search ? search : answer; }
};

// Anything that maps a non-terminal state to action probabilities.
using PolicyFn = std::function<ActionProbs(const EnvState&)>;

// Whether the policy has a choice in this state (the final turn forces ANSWER).
inline bool is_choice_state(const EnvSpec& spec, const EnvState& s) {
  return !s.terminated && s.turn < spec.max_turns - 1;
}

double answer_success_prob(const EnvSpec& spec, int clues);

struct StepResult {
  EnvState state;
  bool outcome = false;  // clue found for SEARCH, correct for ANSWER
  std::optional<double> reward;
};

// Step with the stochastic outcome forced to `outcome`.
StepResult step(const EnvSpec& spec, const EnvState& state, Action action, bool outcome);
// Step drawing the outcome from `rng`.
StepResult step(const EnvSpec& spec, const EnvState& state, Action action, Rng& rng);

struct Trajectory {
  std::int64_t prompt_id = 0;
  std::vector<Action> actions;
  std::vector<bool> observations;  // one per action, see StepResult::outcome
  int search_count = 0;            // stratum key
  double reward = 0.0;
  double log_prob = 0.0;           // sum of log policy probabilities of chosen actions

  bool operator==(const Trajectory&) const = default;
};

Trajectory rollout(const EnvSpec& spec, const PolicyFn& policy, std::int64_t prompt_id,
                   Rng& rng);

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

// Every positive-probability trajectory with its exact probability.
struct TrajectoryLaw {
  std::vector<WeightedTrajectory> support;
  double total_probability() const;
};

inline constexpr std::size_t kDefaultSupportCap = 100000;

// Throws SupportCapError when the support would exceed `cap`.
TrajectoryLaw enumerate(const EnvSpec& spec, const PolicyFn& policy,
                        std::size_t cap = kDefaultSupportCap);

struct StratumDistribution {
  int search_count = 0;
  double probability = 0.0;  // p_k
  double mean = 0.0;         // mu_k
  double std = 0.0;          // sigma_k
};

// Grouped by search count, ascending; only strata with positive probability.
std::vector<StratumDistribution> stratum_distribution(const TrajectoryLaw& law);

double expected_reward(const TrajectoryLaw& law);
double expected_search_count(const TrajectoryLaw& law);

struct RewardLaw;
// Conditional reward law per stratum, for the moment table.
RewardLaw reward_law(const TrajectoryLaw& law);

}  // namespace spg
