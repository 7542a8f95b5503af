#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spg/search_env.hpp"

namespace spg {

// Softmax policy with one pair of logits per choice state (turn, clues), turn < T-1.
// Logit layout: state index s = turn*(turn+1)/2 + clues, entry 2*s + action.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  explicit TabularPolicy(int max_turns, double temperature = 1.0);
  TabularPolicy(int max_turns, std::vector<double> theta, double temperature = 1.0);

  // Uniform-ish start: SEARCH logit = search_bias, ANSWER logit = 0.
  static TabularPolicy with_search_bias(int max_turns, double search_bias,
                                        double temperature = 1.0);

  static std::size_t num_states(int max_turns);
  static std::size_t state_index(const EnvState& s);
  static std::size_t param_index(const EnvState& s, Action a);

  int max_turns() const noexcept { return max_turns_; }
  double temperature() const noexcept { return temperature_; }
  std::size_t size() const noexcept { return theta_.size(); }
  std::span<const double> theta() const noexcept { return theta_; }
  std::span<double> theta() noexcept { return theta_; }

  // Softmax(theta[state]/temperature). Throws UsageError for non-choice states.
  ActionProbs action_probs(const EnvState& s) const;
  ActionProbs operator()(const EnvState& s) const { return action_probs(s); }

 private:
  int max_turns_ = 1;
  double temperature_ = 1.0;
  std::vector<double> theta_;
};

// Replays the trajectory's actions through the policy's states.
double log_prob(const TabularPolicy& policy, const Trajectory& tr);

// Gradient of log_prob with respect to theta: (onehot(a) - probs)/temperature
// summed over visited choice states.
std::vector<double> score(const TabularPolicy& policy, const Trajectory& tr);

// Accumulates weight * score(tr) into `out` without allocating.
void add_scaled_score(const TabularPolicy& policy, const Trajectory& tr, double weight,
                      std::span<double> out);

}  // namespace spg
