#include "spg/policy.hpp"

#include <algorithm>
#include <cmath>

#include "spg/error.hpp"

namespace spg {

std::size_t TabularPolicy::num_states(int max_turns) {
  const auto choice_turns = static_cast<std::size_t>(max_turns > 1 ? max_turns - 1 : 0);
  return choice_turns * (choice_turns + 1) / 2;
}

std::size_t TabularPolicy::state_index(const EnvState& s) {
  const auto t = static_cast<std::size_t>(s.turn);
  return t * (t + 1) / 2 + static_cast<std::size_t>(s.clues);
}

std::size_t TabularPolicy::param_index(const EnvState& s, Action a) {
  return kNumActions * state_index(s) + static_cast<std::size_t>(a);
}

TabularPolicy::TabularPolicy(int max_turns, double temperature)
    : TabularPolicy(max_turns, std::vector<double>(kNumActions * num_states(max_turns), 0.0),
                    temperature) {}

TabularPolicy::TabularPolicy(int max_turns, std::vector<double> theta, double temperature)
    : max_turns_(max_turns), temperature_(temperature), theta_(std::move(theta)) {
  if (max_turns < 1) throw ValidationError("policy: max_turns must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("policy: temperature must be positive");
  }
  if (theta_.size() != kNumActions * num_states(max_turns)) {
    throw ValidationError("policy: theta has the wrong size for max_turns");
  }
  for (double v : theta_) {
    if (!std::isfinite(v)) throw ValidationError("policy: non-finite logit");
  }
}

TabularPolicy TabularPolicy::with_search_bias(int max_turns, double search_bias,
                                              double temperature) {
  TabularPolicy p(max_turns, temperature);
  for (std::size_t s = 0; s < num_states(max_turns); ++s) {
    p.theta_[kNumActions * s + static_cast<std::size_t>(Action::Search)] = search_bias;
  }
  return p;
}

ActionProbs TabularPolicy::action_probs(const EnvState& s) const {
  if (s.terminated || s.turn < 0 || s.turn >= max_turns_ - 1 || s.clues < 0 ||
      s.clues > s.turn) {
    throw UsageError("action_probs: state is not a choice state of this policy");
  }
  const std::size_t base = kNumActions * state_index(s);
  const double zs = theta_[base] / temperature_;
  const double za = theta_[base + 1] / temperature_;
  const double m = std::max(zs, za);
  const double es = std::exp(zs - m);
  const double ea = std::exp(za - m);
  return {es / (es + ea), ea / (es + ea)};
}

namespace {

template <typename Visit>
void replay(const TabularPolicy& policy, const Trajectory& tr, Visit&& visit) {
  EnvState s;
  for (std::size_t i = 0; i < tr.actions.size(); ++i) {
    const Action a = tr.actions[i];
    if (s.turn < policy.max_turns() - 1) visit(s, a);
    if (a == Action::Search) {
      s.turn += 1;
      s.clues += tr.observations[i] ? 1 : 0;
    }
  }
}

}  // namespace

double log_prob(const TabularPolicy& policy, const Trajectory& tr) {
  double lp = 0.0;
  replay(policy, tr, [&](const EnvState& s, Action a) {
    const std::size_t base = kNumActions * TabularPolicy::state_index(s);
    const double t = policy.temperature();
    const double z0 = policy.theta()[base] / t;
    const double z1 = policy.theta()[base + 1] / t;
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    lp += (a == Action::Search ? z0 : z1) - lse;
  });
  return lp;
}

void add_scaled_score(const TabularPolicy& policy, const Trajectory& tr, double weight,
                      std::span<double> out) {
  if (out.size() != policy.size()) throw ValidationError("score: output has the wrong size");
  const double inv_t = 1.0 / policy.temperature();
  replay(policy, tr, [&](const EnvState& s, Action a) {
    const auto p = policy.action_probs(s);
    const std::size_t base = kNumActions * TabularPolicy::state_index(s);
    const double onehot_s = a == Action::Search ? 1.0 : 0.0;
    out[base] += weight * (onehot_s - p.search) * inv_t;
    out[base + 1] += weight * ((1.0 - onehot_s) - p.answer) * inv_t;
  });
}

std::vector<double> score(const TabularPolicy& policy, const Trajectory& tr) {
  std::vector<double> g(policy.size(), 0.0);
  add_scaled_score(policy, tr, 1.0, g);
  return g;
}

}  // namespace spg
