#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "doctest.h"

#include "spg/advantage.hpp"

namespace spgtest {

// One prompt; stratum k holds the k-th list.
inline spg::RewardBatch strata(std::initializer_list<std::initializer_list<double>> groups) {
  std::vector<double> r;
  std::vector<std::uint32_t> k;
  std::uint32_t key = 0;
  for (const auto& g : groups) {
    for (double x : g) {
      r.push_back(x);
      k.push_back(key);
    }
    ++key;
  }
  return spg::RewardBatch::single_prompt(r, k);
}

inline spg::RewardBatch one_stratum(std::vector<double> r) {
  std::vector<std::uint32_t> k(r.size(), 0);
  return spg::RewardBatch::single_prompt(r, k);
}

inline void check_close(std::span<const double> got, std::span<const double> want,
                        double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    INFO("index " << i);
    CHECK(std::abs(got[i] - want[i]) <= tol);
  }
}

inline void check_close(std::span<const double> got, std::initializer_list<double> want,
                        double tol = 1e-12) {
  std::vector<double> w(want);
  check_close(got, std::span<const double>(w), tol);
}

}  // namespace spgtest
