#include <cmath>
#include <functional>

#include "doctest.h"

#include "spg/error.hpp"
#include "spg/policy.hpp"
#include "spg/random.hpp"
#include "spg/rollouts.hpp"
#include "spg/search_env.hpp"
#include "spg/tolerances.hpp"
#include "spg/variance.hpp"

using namespace spg;

namespace {

ActionProbs answer_first(const EnvState&) { return {0.0, 1.0}; }
ActionProbs always_search(const EnvState&) { return {1.0, 0.0}; }

}  // namespace

TEST_CASE("env spec validation") {
  EnvSpec s;
  CHECK_NOTHROW(s.validate());
  s.max_turns = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = EnvSpec{};
  s.clue_prob = 1.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = EnvSpec{};
  s.hops = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = EnvSpec{};
  s.p_guess_base = 0.85;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("forced steps") {
  EnvSpec spec;
  auto r = step(spec, EnvState{2, 2, false}, Action::Answer, true);
  CHECK(r.state.terminated);
  REQUIRE(r.reward.has_value());
  CHECK(*r.reward == 1.0);

  r = step(spec, EnvState{0, 0, false}, Action::Search, true);
  CHECK(r.state == EnvState{1, 1, false});
  CHECK_FALSE(r.reward.has_value());
  r = step(spec, EnvState{0, 0, false}, Action::Search, false);
  CHECK(r.state == EnvState{1, 0, false});

  CHECK_THROWS_AS(step(spec, EnvState{1, 0, true}, Action::Answer, true), UsageError);
  CHECK_THROWS_AS(step(spec, EnvState{3, 0, false}, Action::Search, true), UsageError);
}

TEST_CASE("answer probability by clue count") {
  EnvSpec spec;
  CHECK(answer_success_prob(spec, 0) == doctest::Approx(0.1));
  CHECK(answer_success_prob(spec, 1) == doctest::Approx(0.3));
  CHECK(answer_success_prob(spec, 2) == doctest::Approx(0.9));
  CHECK(answer_success_prob(spec, 3) == doctest::Approx(0.9));
}

TEST_CASE("rollouts of deterministic policies") {
  EnvSpec spec;
  spec.max_turns = 3;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng = make_stream(1, 0, i);
    CHECK(rollout(spec, answer_first, 0, rng).search_count == 0);
    auto t = rollout(spec, always_search, 0, rng);
    CHECK(t.search_count == 2);
    CHECK(t.actions.back() == Action::Answer);
    CHECK(t.actions.size() == t.observations.size());
  }
}

TEST_CASE("rollout replay is bit-identical") {
  EnvSpec spec;
  TabularPolicy policy = TabularPolicy::with_search_bias(4, 0.3);
  for (std::uint64_t i = 0; i < 20; ++i) {
    Rng a = make_stream(9, 2, i), b = make_stream(9, 2, i);
    CHECK(rollout(spec, std::cref(policy), 1, a) == rollout(spec, std::cref(policy), 1, b));
  }
}

TEST_CASE("enumeration of the default spec") {
  EnvSpec spec;
  TabularPolicy policy(4);
  auto law = enumerate(spec, std::cref(policy));
  CHECK(law.support.size() == 30);
  CHECK(std::abs(law.total_probability() - 1.0) <= tol::kProbabilitySum);
  for (const auto& w : law.support) {
    CHECK(std::abs(std::log(w.probability) -
                   (w.trajectory.log_prob + [&] {
                     double lp = 0.0;
                     int c = 0;
                     for (std::size_t i = 0; i + 1 < w.trajectory.actions.size(); ++i) {
                       const bool found = w.trajectory.observations[i];
                       lp += std::log(found ? spec.clue_prob : 1.0 - spec.clue_prob);
                       c += found;
                     }
                     const double pa = answer_success_prob(spec, c);
                     lp += std::log(w.trajectory.observations.back() ? pa : 1.0 - pa);
                     return lp;
                   }())) <= 1e-12);
  }
  CHECK_THROWS_AS(enumerate(spec, std::cref(policy), 5), SupportCapError);
}

TEST_CASE("stratum distributions") {
  EnvSpec spec;
  auto law = enumerate(spec, answer_first);
  auto d = stratum_distribution(law);
  REQUIRE(d.size() == 1);
  CHECK(d[0].search_count == 0);
  CHECK(d[0].probability == doctest::Approx(1.0));
  CHECK(d[0].mean == doctest::Approx(0.1));
  CHECK(expected_reward(law) == doctest::Approx(0.1));

  EnvSpec two;
  two.max_turns = 2;
  two.hops = 1;
  two.p_guess_per_clue = 0.2;
  auto law2 = enumerate(two, always_search);
  auto d2 = stratum_distribution(law2);
  REQUIRE(d2.size() == 1);
  CHECK(d2[0].search_count == 1);
  CHECK(d2[0].probability == doctest::Approx(1.0));
  CHECK(d2[0].mean == doctest::Approx(0.7 * 0.9 + 0.3 * 0.1).epsilon(1e-12));

  EnvSpec ones;
  ones.reward_wrong = 1.0;
  CHECK(expected_reward(enumerate(ones, TabularPolicy(4))) == doctest::Approx(1.0));
}

TEST_CASE("law of total expectation and heterogeneous strata") {
  EnvSpec spec;
  for (double bias : {-1.0, 0.0, 0.7}) {
    TabularPolicy policy = TabularPolicy::with_search_bias(4, bias);
    auto law = enumerate(spec, std::cref(policy));
    auto d = stratum_distribution(law);
    double total = 0.0, sum_p = 0.0;
    for (const auto& s : d) {
      total += s.probability * s.mean;
      sum_p += s.probability;
    }
    CHECK(std::abs(total - expected_reward(law)) <= tol::kLawOfTotalExpectation);
    CHECK(std::abs(sum_p - 1.0) <= tol::kProbabilitySum);
    REQUIRE(d.size() == 4);
    CHECK(d[0].mean < d[1].mean);
    CHECK(d[1].mean < d[2].mean);
  }
}

TEST_CASE("multi-search is optimal on the default spec") {
  EnvSpec spec;
  auto answer_now = expected_reward(enumerate(spec, answer_first));
  auto search_all = expected_reward(enumerate(spec, always_search));
  CHECK(search_all > answer_now + 0.3);
}

TEST_CASE("reward law matches the stratum distribution") {
  EnvSpec spec;
  TabularPolicy policy(4);
  auto law = enumerate(spec, std::cref(policy));
  auto rl = reward_law(law);
  auto d = stratum_distribution(law);
  REQUIRE(rl.strata.size() == d.size());
  auto t = moment_table(rl);
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK(t.strata[k].mu == doctest::Approx(d[k].mean).epsilon(1e-12));
    CHECK(t.strata[k].sigma == doctest::Approx(d[k].std).epsilon(1e-12));
  }
}

TEST_CASE("Monte Carlo strata match enumeration") {
  EnvSpec spec;
  TabularPolicy policy = TabularPolicy::with_search_bias(4, 0.2);
  auto d = stratum_distribution(enumerate(spec, std::cref(policy)));
  auto mc = monte_carlo_strata(spec, policy, 100000, 42);
  REQUIRE(mc.size() == d.size());
  for (std::size_t k = 0; k < d.size(); ++k) {
    CHECK(std::abs(mc[k].frequency - d[k].probability) <= tol::kMonteCarloSigmas * mc[k].frequency_se);
    CHECK(std::abs(mc[k].mean_reward - d[k].mean) <= tol::kMonteCarloSigmas * mc[k].mean_reward_se);
  }
}
