#pragma once

// Advantage estimators over a batch of scalar rewards with a stratification key.
//
// Every estimator is a pure function of its inputs. Standard deviations use the
// population divisor (1/n).

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace spg {

inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr double kDefaultAlpha = 0.8;

// Normalization scope: statistics per prompt group, or over the whole batch.
enum class Scope { PerPrompt, WholeBatch };

enum class Estimator { Global, Stratified, GN, SAN, Blend };

std::string_view to_string(Estimator e);
std::string_view to_string(Scope s);
// Case-insensitive; accepts "global", "stratified", "gn", "san", "blend".
Estimator parse_estimator(std::string_view name);
// Accepts "per_prompt" and "whole_batch".
Scope parse_scope(std::string_view name);

struct RewardEntry {
  std::int64_t trajectory_id = 0;
  std::int64_t prompt_id = 0;
  std::uint32_t stratum_key = 0;
  double reward = 0.0;
};

// Non-empty list of entries with finite rewards and unique trajectory ids.
class RewardBatch {
 public:
  explicit RewardBatch(std::vector<RewardEntry> entries);

  // Convenience: one prompt, trajectory ids 0..n-1.
  static RewardBatch single_prompt(std::span<const double> rewards,
                                   std::span<const std::uint32_t> strata);

  std::span<const RewardEntry> entries() const noexcept { return entries_; }
  const RewardEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<double> rewards() const;

 private:
  std::vector<RewardEntry> entries_;
};

struct GroupKey {
  std::int64_t prompt_id = 0;  // 0 when the scope is WholeBatch
  std::uint32_t stratum = 0;
  auto operator<=>(const GroupKey&) const = default;
};

// Disjoint, non-empty groups covering every batch index.
struct StratumPartition {
  Scope scope = Scope::PerPrompt;
  std::map<GroupKey, std::vector<std::size_t>> groups;

  std::size_t covered() const;
};

StratumPartition stratify(const RewardBatch& batch, Scope scope = Scope::PerPrompt);

struct StratumStats {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // population form; exactly 0 iff all values are equal
};

// Throws EmptyStratumError on an empty list.
StratumStats stratum_stats(std::span<const double> rewards);

struct AdvantageVector {
  Estimator estimator = Estimator::Global;
  std::vector<double> values;
  double epsilon = 0.0;
  double alpha = 1.0;  // meaningful for Blend only
};

// R_i minus the mean of the entry's scope group.
AdvantageVector adv_global(const RewardBatch& batch, Scope scope = Scope::PerPrompt);

// R_i minus the mean of its stratum.
AdvantageVector adv_stratified(const RewardBatch& batch, const StratumPartition& partition);

// (R_i - mean_k) / (std_k + epsilon). A zero-std stratum with epsilon == 0 throws
// DivisionByZeroError.
AdvantageVector adv_san(const RewardBatch& batch, const StratumPartition& partition,
                        double epsilon = kDefaultEpsilon);

// (R_i - mean_scope) / (std_scope + epsilon).
AdvantageVector adv_gn(const RewardBatch& batch, Scope scope = Scope::PerPrompt,
                       double epsilon = kDefaultEpsilon);

// alpha * SAN + (1 - alpha) * GN. alpha must lie in [0, 1].
AdvantageVector adv_blend(const RewardBatch& batch, const StratumPartition& partition,
                          double alpha = kDefaultAlpha, double epsilon = kDefaultEpsilon,
                          Scope gn_scope = Scope::PerPrompt);

struct AdvantageOptions {
  double epsilon = kDefaultEpsilon;
  double alpha = kDefaultAlpha;
  Scope gn_scope = Scope::PerPrompt;
  Scope stratum_scope = Scope::PerPrompt;
};

// Dispatch on the estimator tag. The global baseline uses gn_scope as its scope.
AdvantageVector compute_advantages(const RewardBatch& batch, Estimator estimator,
                                   const AdvantageOptions& options = {});

// GN = scale * SAN + offset within one stratum.
struct GnDecomposition {
  GroupKey key;
  double scale = 1.0;   // (std_k + eps) / (std_global + eps)
  double offset = 0.0;  // (mean_k - mean_global) / (std_global + eps)
};

// Per-stratum scale and offset relating GN to SAN. Every stratum must sit inside a
// single GN scope group: a whole-batch partition with per-prompt GN is rejected when
// the batch has more than one prompt.
std::vector<GnDecomposition> decompose_gn(const RewardBatch& batch,
                                          const StratumPartition& partition,
                                          double epsilon = kDefaultEpsilon,
                                          Scope gn_scope = Scope::PerPrompt);

// Reference-group statistics for each entry under a scope. Exposed for the
// variance analysis and the gradient split.
std::vector<StratumStats> scope_stats_per_entry(const RewardBatch& batch, Scope scope);

}  // namespace spg
