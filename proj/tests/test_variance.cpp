#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "spg/error.hpp"
#include "spg/tolerances.hpp"
#include "spg/variance.hpp"
#include "spg/verify.hpp"

using namespace spg;
using spgtest::one_stratum;
using spgtest::strata;

TEST_CASE("empirical variance") {
  std::vector<double> a{0, 2, 4, 6}, b{3, 3, 3}, c{-1, 1};
  CHECK(empirical_variance(a) == 5.0);
  CHECK(empirical_variance(b) == 0.0);
  CHECK(empirical_variance(c) == 1.0);
  CHECK_THROWS_AS(empirical_variance(std::span<const double>{}), ValidationError);
}

TEST_CASE("within/between decomposition examples") {
  auto b = strata({{0, 2}, {4, 6}});
  auto r = variance_decomposition(b, stratify(b));
  CHECK(r.var_global == doctest::Approx(5));
  CHECK(r.var_stratified == doctest::Approx(1));
  CHECK(r.between_stratum == doctest::Approx(4));

  b = strata({{0, 1}, {0, 1}});
  r = variance_decomposition(b, stratify(b));
  CHECK(r.between_stratum == 0.0);
  CHECK(r.var_global == r.var_stratified);

  b = strata({{0, 0}, {1, 1}});
  r = variance_decomposition(b, stratify(b));
  CHECK(r.var_global == doctest::Approx(0.25));
  CHECK(r.var_stratified == 0.0);
  CHECK(r.between_stratum == doctest::Approx(0.25));
}

TEST_CASE("SAN decomposition examples") {
  auto b = strata({{0, 2}, {4, 6}});
  auto r = san_variance_decomposition(b, stratify(b), 0.0);
  CHECK(r.var_san == doctest::Approx(1));
  CHECK(r.between_stratum == doctest::Approx(4));
  CHECK(r.normalization_effect == doctest::Approx(0).scale(1));
  CHECK(r.var_global - r.var_san == doctest::Approx(4));

  b = strata({{1, 3}, {-2, 0}, {10, 12}});
  r = san_variance_decomposition(b, stratify(b), 0.0);
  CHECK(std::abs(r.normalization_effect) <= 1e-15);

  b = one_stratum({0, 4});
  r = san_variance_decomposition(b, stratify(b), 0.0);
  CHECK(r.var_global == doctest::Approx(4));
  CHECK(r.var_san == doctest::Approx(1));
  CHECK(r.between_stratum == 0.0);
  CHECK(r.normalization_effect == doctest::Approx(3));

  b = strata({{0, 2}, {5}});
  CHECK_THROWS_AS(san_variance_decomposition(b, stratify(b), 0.0), DivisionByZeroError);
}

TEST_CASE("decomposition identities hold on random batches") {
  for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
    for (const auto& b : random_batch_corpus(300, 23, kind)) {
      auto p = stratify(b);
      auto r = variance_decomposition(b, p);
      CHECK(std::abs(r.stratified_residual()) <= tol::kVarianceIdentity);
      CHECK(r.between_stratum >= 0.0);
      CHECK(r.var_stratified <= r.var_global + tol::kVarianceIdentity);
      for (double eps : {1e-6, 0.1}) {
        auto s = san_variance_decomposition(b, p, eps);
        CHECK(std::abs(s.san_residual()) <= tol::kVarianceIdentity);
      }
    }
  }
}

namespace {

RewardLaw two_equiprobable() {
  RewardLaw law;
  law.strata.push_back({0, 0.5, {{0.0, 0.5}, {2.0, 0.5}}});
  law.strata.push_back({1, 0.5, {{4.0, 0.5}, {6.0, 0.5}}});
  return law;
}

}  // namespace

TEST_CASE("moment table on two equiprobable strata") {
  auto t = moment_table(two_equiprobable());
  REQUIRE(t.strata.size() == 2);
  const double r5 = std::sqrt(5.0);
  CHECK(t.sigma == doctest::Approx(r5).epsilon(1e-12));
  CHECK(t.strata[0].mean_gn == doctest::Approx(-2 / r5).epsilon(1e-12));
  CHECK(t.strata[0].var_gn == doctest::Approx(0.2).epsilon(1e-12));
  for (const auto& s : t.strata) {
    CHECK(std::abs(s.mean_san) <= tol::kMomentTable);
    CHECK(std::abs(s.var_san - 1.0) <= tol::kMomentTable);
  }
  CHECK(std::abs(t.global_var_san - 1.0) <= tol::kMomentTable);
  CHECK(std::abs(t.global_var_gn - 1.0) <= tol::kMomentTable);
  CHECK(std::abs(t.global_mean_san) <= tol::kMomentTable);
  CHECK(std::abs(t.global_mean_gn) <= tol::kMomentTable);
}

TEST_CASE("moment table: enumeration, closed form and sampling agree") {
  RewardLaw law;
  law.strata.push_back({0, 0.2, {{0.0, 0.9}, {1.0, 0.1}}});
  law.strata.push_back({1, 0.5, {{0.0, 0.4}, {1.0, 0.6}}});
  law.strata.push_back({3, 0.3, {{-1.0, 0.25}, {2.0, 0.5}, {4.0, 0.25}}});
  auto e = moment_table(law);
  auto c = moment_table_closed_form(law);
  for (std::size_t k = 0; k < e.strata.size(); ++k) {
    CHECK(std::abs(e.strata[k].mean_gn - c.strata[k].mean_gn) <= tol::kMomentTable);
    CHECK(std::abs(e.strata[k].var_gn - c.strata[k].var_gn) <= tol::kMomentTable);
    CHECK(std::abs(e.strata[k].var_gn - e.strata[k].sigma * e.strata[k].sigma / (e.sigma * e.sigma)) <=
          tol::kMomentTable);
  }
  auto m = moment_table_monte_carlo(law, 200000, 1);
  CHECK(m.global_var_san == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m.global_var_gn == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(m.strata[0].mean_gn - e.strata[0].mean_gn) < 0.05);
}

TEST_CASE("moment table errors") {
  RewardLaw law;
  law.strata.push_back({0, 1.0, {{1.0, 1.0}}});
  CHECK_THROWS_AS(moment_table(law), DivisionByZeroError);
  RewardLaw bad;
  bad.strata.push_back({0, 1.0, {{0.0, 0.5}, {1.0, 0.4}}});
  CHECK_THROWS_AS(moment_table(bad), ValidationError);
  RewardLaw zero;
  zero.strata.push_back({0, 0.0, {{0.0, 0.5}, {1.0, 0.5}}});
  zero.strata.push_back({1, 1.0, {{0.0, 0.5}, {1.0, 0.5}}});
  CHECK_THROWS_AS(moment_table(zero), ValidationError);
}
