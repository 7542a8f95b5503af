#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "spg/advantage.hpp"
#include "spg/error.hpp"
#include "spg/random.hpp"
#include "spg/tolerances.hpp"
#include "spg/verify.hpp"

using namespace spg;
using spgtest::check_close;
using spgtest::one_stratum;
using spgtest::strata;

TEST_CASE("batch validation") {
  CHECK_THROWS_AS(RewardBatch({}), ValidationError);
  CHECK_THROWS_AS(RewardBatch({{0, 0, 0, 1.0}, {0, 0, 1, 2.0}}), ValidationError);
  CHECK_THROWS_AS(RewardBatch({{0, 0, 0, std::nan("")}}), ValidationError);
  CHECK_THROWS_AS(RewardBatch({{0, 0, 0, INFINITY}}), ValidationError);
}

TEST_CASE("parse names") {
  CHECK(parse_estimator("grpo") == Estimator::GN);
  CHECK(parse_estimator("san") == Estimator::SAN);
  CHECK(parse_estimator("blend") == Estimator::Blend);
  CHECK(parse_scope("whole_batch") == Scope::WholeBatch);
  CHECK_THROWS_AS(parse_estimator("ppo"), ValidationError);
  CHECK_THROWS_AS(parse_scope("global"), ValidationError);
  for (auto e : {Estimator::Global, Estimator::Stratified, Estimator::GN, Estimator::SAN,
                 Estimator::Blend}) {
    CHECK(parse_estimator(to_string(e)) == e);
  }
}

TEST_CASE("stratify groups") {
  auto p = stratify(strata({{1, 2}, {3, 4}}));
  REQUIRE(p.groups.size() == 2);
  CHECK(p.groups.at({0, 0}).size() == 2);
  CHECK(p.groups.at({0, 1}).size() == 2);

  std::vector<double> r{1, 2, 3};
  std::vector<std::uint32_t> k{2, 2, 2};
  auto q = stratify(RewardBatch::single_prompt(r, k));
  REQUIRE(q.groups.size() == 1);
  CHECK(q.groups.begin()->second.size() == 3);

  RewardBatch two({{0, 0, 0, 1}, {1, 0, 1, 0}, {2, 1, 0, 1}, {3, 1, 1, 0}});
  auto pp = stratify(two, Scope::PerPrompt);
  CHECK(pp.groups.size() == 4);
  for (const auto& [key, idx] : pp.groups) CHECK(idx.size() == 1);
  CHECK(pp.covered() == 4);
  auto wb = stratify(two, Scope::WholeBatch);
  CHECK(wb.groups.size() == 2);
}

TEST_CASE("stratum stats") {
  std::vector<double> a{0, 2}, b{5}, c{1, 1, 1};
  auto s = stratum_stats(a);
  CHECK(s.mean == 1.0);
  CHECK(s.std == 1.0);
  s = stratum_stats(b);
  CHECK(s.mean == 5.0);
  CHECK(s.std == 0.0);
  s = stratum_stats(c);
  CHECK(s.mean == 1.0);
  CHECK(s.std == 0.0);
  std::vector<double> third(3, 0.1);
  CHECK(stratum_stats(third).std == 0.0);
  CHECK_THROWS_AS(stratum_stats(std::span<const double>{}), EmptyStratumError);
}

TEST_CASE("global advantage") {
  check_close(adv_global(one_stratum({1, 0, 1, 1})).values, {0.25, -0.75, 0.25, 0.25});
  check_close(adv_global(one_stratum({7, 7, 7})).values, {0, 0, 0});
  check_close(adv_global(one_stratum({0, 2, 4, 6})).values, {-3, -1, 1, 3});
}

TEST_CASE("stratified advantage") {
  auto b = strata({{0, 0}, {1, 1}});
  check_close(adv_stratified(b, stratify(b)).values, {0, 0, 0, 0});
  b = strata({{1, 0}, {1, 1}});
  check_close(adv_stratified(b, stratify(b)).values, {0.5, -0.5, 0, 0});
  b = one_stratum({0, 2, 4, 6});
  check_close(adv_stratified(b, stratify(b)).values, adv_global(b).values);
}

TEST_CASE("SAN advantage") {
  auto b = one_stratum({2, 4});
  check_close(adv_san(b, stratify(b), 0.0).values, {-1, 1});
  b = one_stratum({5});
  check_close(adv_san(b, stratify(b), 1e-6).values, {0});
  b = strata({{0, 2}, {4, 6}});
  check_close(adv_san(b, stratify(b), 0.0).values, {-1, 1, -1, 1});
  b = strata({{0, 2}, {5}});
  CHECK_THROWS_AS(adv_san(b, stratify(b), 0.0), DivisionByZeroError);
  CHECK_THROWS_AS(adv_san(b, stratify(b), -1.0), ValidationError);
}

TEST_CASE("GN advantage") {
  check_close(adv_gn(one_stratum({0, 1}), Scope::PerPrompt, 0.0).values, {-1, 1});
  const double r5 = std::sqrt(5.0);
  check_close(adv_gn(one_stratum({0, 2, 4, 6}), Scope::PerPrompt, 0.0).values,
              {-3 / r5, -1 / r5, 1 / r5, 3 / r5});
  check_close(adv_gn(one_stratum({3, 3}), Scope::PerPrompt, 1e-6).values, {0, 0});
  CHECK_THROWS_AS(adv_gn(one_stratum({3, 3}), Scope::PerPrompt, 0.0), DivisionByZeroError);

  RewardBatch two({{0, 0, 0, 0}, {1, 0, 0, 1}, {2, 1, 0, 10}, {3, 1, 0, 12}});
  check_close(adv_gn(two, Scope::PerPrompt, 0.0).values, {-1, 1, -1, 1});
  auto wb = adv_gn(two, Scope::WholeBatch, 0.0).values;
  CHECK(wb[0] < -0.9);
  CHECK(wb[3] > 0.9);
}

TEST_CASE("blend advantage") {
  auto b = strata({{0, 2}, {4, 6}});
  auto p = stratify(b);
  CHECK(adv_blend(b, p, 1.0, 1e-6).values == adv_san(b, p, 1e-6).values);
  CHECK(adv_blend(b, p, 0.0, 1e-6).values == adv_gn(b, Scope::PerPrompt, 1e-6).values);
  auto half = adv_blend(b, p, 0.5, 0.0).values;
  CHECK(half[0] == doctest::Approx(0.5 * -1 + 0.5 * (-3 / std::sqrt(5.0))).epsilon(1e-12));
  CHECK(half[0] == doctest::Approx(-1.1708).epsilon(1e-4));
  CHECK_THROWS_AS(adv_blend(b, p, 1.5, 1e-6), ValidationError);
  CHECK_THROWS_AS(adv_blend(b, p, -0.1, 1e-6), ValidationError);
}

TEST_CASE("compute_advantages dispatches") {
  auto b = strata({{0, 1, 1}, {1, 1, 0, 0}});
  AdvantageOptions o;
  auto p = stratify(b);
  CHECK(compute_advantages(b, Estimator::Global, o).values == adv_global(b).values);
  CHECK(compute_advantages(b, Estimator::Stratified, o).values == adv_stratified(b, p).values);
  CHECK(compute_advantages(b, Estimator::SAN, o).values == adv_san(b, p, o.epsilon).values);
  CHECK(compute_advantages(b, Estimator::GN, o).values == adv_gn(b, o.gn_scope, o.epsilon).values);
  CHECK(compute_advantages(b, Estimator::Blend, o).values ==
        adv_blend(b, p, o.alpha, o.epsilon).values);
}

TEST_CASE("GN decomposition examples") {
  auto b = strata({{0, 2}, {4, 6}});
  auto d = decompose_gn(b, stratify(b), 0.0);
  REQUIRE(d.size() == 2);
  const double r5 = std::sqrt(5.0);
  CHECK(d[0].scale == doctest::Approx(1 / r5).epsilon(1e-12));
  CHECK(d[0].offset == doctest::Approx(-2 / r5).epsilon(1e-12));
  CHECK(d[0].scale * -1.0 + d[0].offset == doctest::Approx(-3 / r5).epsilon(1e-12));

  auto one = one_stratum({0, 1, 3});
  auto d1 = decompose_gn(one, stratify(one), 1e-6);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0].scale == 1.0);
  CHECK(d1[0].offset == 0.0);

  auto eq = strata({{0, 2}, {1, 1}});
  for (const auto& g : decompose_gn(eq, stratify(eq), 1e-6)) CHECK(g.offset == 0.0);
}

// Properties over random batches.

TEST_CASE("global minus stratified is constant within each stratum") {
  for (const auto& b : random_batch_corpus(200, 11, CorpusKind::Continuous)) {
    auto p = stratify(b);
    auto g = adv_global(b).values;
    auto s = adv_stratified(b, p).values;
    const double mean = stratum_stats(b.rewards()).mean;
    for (const auto& [key, idx] : p.groups) {
      std::vector<double> r;
      for (auto i : idx) r.push_back(b[i].reward);
      const double offset = stratum_stats(r).mean - mean;
      for (auto i : idx) CHECK(std::abs(g[i] - s[i] - offset) <= tol::kAdvantageIdentity);
    }
  }
}

TEST_CASE("SAN is invariant under positive affine maps") {
  Rng rng = make_stream(3, 0, 0);
  for (const auto& b : random_batch_corpus(100, 5, CorpusKind::Continuous)) {
    const double a = 1e-3 + uniform01(rng) * (10.0 - 1e-3);
    const double c = -10.0 + 20.0 * uniform01(rng);
    std::vector<RewardEntry> e(b.entries().begin(), b.entries().end());
    for (auto& x : e) x.reward = a * x.reward + c;
    RewardBatch t(e);
    auto base = adv_san(b, stratify(b), 0.0).values;
    auto moved = adv_san(t, stratify(t), 0.0).values;
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(std::abs(base[i] - moved[i]) <= tol::kAffineInvariance);
    }
  }
}

TEST_CASE("GN reconstructs from scaled SAN plus offset") {
  for (double eps : {0.0, 1e-6, 0.1}) {
    for (const auto& b : random_batch_corpus(200, 13, CorpusKind::Continuous)) {
      auto p = stratify(b);
      auto san = adv_san(b, p, eps).values;
      auto gn = adv_gn(b, Scope::PerPrompt, eps).values;
      auto d = decompose_gn(b, p, eps);
      std::size_t g = 0;
      for (const auto& [key, idx] : p.groups) {
        REQUIRE(d[g].key == key);
        for (auto i : idx) {
          CHECK(std::abs(d[g].scale * san[i] + d[g].offset - gn[i]) <= tol::kAdvantageIdentity);
        }
        ++g;
      }
    }
  }
}

TEST_CASE("SAN has zero mean and unit variance within non-constant strata") {
  for (const auto& b : random_batch_corpus(100, 17, CorpusKind::Continuous)) {
    auto p = stratify(b);
    auto san = adv_san(b, p, 0.0).values;
    for (const auto& [key, idx] : p.groups) {
      std::vector<double> v;
      for (auto i : idx) v.push_back(san[i]);
      auto s = stratum_stats(v);
      CHECK(std::abs(s.mean) <= 1e-12);
      CHECK(std::abs(s.std - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("blend is linear in alpha") {
  for (const auto& b : random_batch_corpus(50, 19, CorpusKind::Binary)) {
    auto p = stratify(b);
    auto san = adv_san(b, p, 1e-6).values;
    auto gn = adv_gn(b, Scope::PerPrompt, 1e-6).values;
    auto bl = adv_blend(b, p, 0.3, 1e-6).values;
    for (std::size_t i = 0; i < bl.size(); ++i) {
      CHECK(std::abs(bl[i] - (0.3 * san[i] + 0.7 * gn[i])) <= 1e-9);
    }
  }
}
