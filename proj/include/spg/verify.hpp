#pragma once

// Identity suite behind `spg verify`: each check measures the largest residual of
// one exact identity over seeded inputs and compares it to a fixed tolerance.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spg/advantage.hpp"
#include "spg/rollouts.hpp"
#include "spg/search_env.hpp"

namespace spg {

inline constexpr const char* kCheckNames[] = {"prop1", "thm1", "thm2", "prop3", "prop5",
                                              "thm3",  "thm5", "thm6", "eq4",   "blend_endpoints"};

struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  const CheckResult& at(const std::string& name) const;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  std::size_t batches = 1000;      // size of each random batch corpus
  std::size_t affine_maps = 100;
  std::size_t random_thetas = 10;
  EnvSpec env{};
  std::optional<std::string> perturb;  // name of a check to corrupt on purpose
  Exec exec = Exec::Serial;
};

// Random single-prompt batches, K in [2, 64], 1 to 8 strata.
//  Continuous: every stratum has >= 2 entries with distinct real rewards, so every
//    stratum std is positive; every 10th batch has all stratum means equal (exactly,
//    in integer arithmetic).
//  Binary: 0/1 rewards, singletons and constant strata allowed.
enum class CorpusKind { Continuous, Binary };
std::vector<RewardBatch> random_batch_corpus(std::size_t count, std::uint64_t seed,
                                             CorpusKind kind);

// Individual checks. `fault` is added to one side of the compared quantities.
CheckResult check_prop1(const VerifyOptions& o, double fault = 0.0);
CheckResult check_thm1(const VerifyOptions& o, double fault = 0.0);
CheckResult check_thm2(const VerifyOptions& o, double fault = 0.0);
CheckResult check_prop3(const VerifyOptions& o, double fault = 0.0);
CheckResult check_prop5(const VerifyOptions& o, double fault = 0.0);
CheckResult check_thm3(const VerifyOptions& o, double fault = 0.0);
CheckResult check_thm5(const VerifyOptions& o, double fault = 0.0);
CheckResult check_thm6(const VerifyOptions& o, double fault = 0.0);
CheckResult check_eq4(const VerifyOptions& o, double fault = 0.0);
CheckResult check_blend_endpoints(const VerifyOptions& o, double fault = 0.0);

// Runs all checks in kCheckNames order. Throws ValidationError for an unknown
// perturb name.
VerifyReport run_verify(const VerifyOptions& options);

}  // namespace spg
