#include "spg/advantage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>

#include "spg/error.hpp"

namespace spg {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double checked_denominator(double std, double epsilon, const char* what) {
  const double d = std + epsilon;
  if (d == 0.0) {
    throw DivisionByZeroError(std::string(what) +
                              ": zero standard deviation with epsilon = 0; use epsilon > 0");
  }
  return d;
}

void require_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("epsilon must be a finite non-negative number");
  }
}

std::int64_t scope_prompt(const RewardEntry& e, Scope scope) {
  return scope == Scope::PerPrompt ? e.prompt_id : 0;
}

std::vector<double> gather(const RewardBatch& batch, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(batch[i].reward);
  return out;
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Global: return "global";
    case Estimator::Stratified: return "stratified";
    case Estimator::GN: return "gn";
    case Estimator::SAN: return "san";
    case Estimator::Blend: return "blend";
  }
  return "unknown";
}

std::string_view to_string(Scope s) {
  return s == Scope::PerPrompt ? "per_prompt" : "whole_batch";
}

Estimator parse_estimator(std::string_view name) {
  const auto n = lower(name);
  if (n == "global") return Estimator::Global;
  if (n == "stratified") return Estimator::Stratified;
  if (n == "gn" || n == "grpo") return Estimator::GN;
  if (n == "san") return Estimator::SAN;
  if (n == "blend") return Estimator::Blend;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

Scope parse_scope(std::string_view name) {
  const auto n = lower(name);
  if (n == "per_prompt") return Scope::PerPrompt;
  if (n == "whole_batch") return Scope::WholeBatch;
  throw ValidationError("unknown scope '" + std::string(name) + "'");
}

RewardBatch::RewardBatch(std::vector<RewardEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("reward batch must be non-empty");
  std::set<std::int64_t> ids;
  for (const auto& e : entries_) {
    if (!std::isfinite(e.reward)) throw ValidationError("reward batch contains a non-finite reward");
    if (!ids.insert(e.trajectory_id).second) {
      throw ValidationError("duplicate trajectory id " + std::to_string(e.trajectory_id));
    }
  }
}

RewardBatch RewardBatch::single_prompt(std::span<const double> rewards,
                                       std::span<const std::uint32_t> strata) {
  if (rewards.size() != strata.size()) {
    throw ValidationError("rewards and strata must have the same length");
  }
  std::vector<RewardEntry> entries;
  entries.reserve(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    entries.push_back({static_cast<std::int64_t>(i), 0, strata[i], rewards[i]});
  }
  return RewardBatch(std::move(entries));
}

std::vector<double> RewardBatch::rewards() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.reward);
  return out;
}

std::size_t StratumPartition::covered() const {
  std::size_t n = 0;
  for (const auto& [key, idx] : groups) n += idx.size();
  return n;
}

StratumPartition stratify(const RewardBatch& batch, Scope scope) {
  StratumPartition p;
  p.scope = scope;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& e = batch[i];
    p.groups[GroupKey{scope_prompt(e, scope), e.stratum_key}].push_back(i);
  }
  return p;
}

StratumStats stratum_stats(std::span<const double> rewards) {
  if (rewards.empty()) throw EmptyStratumError("stratum_stats: empty stratum");
  StratumStats s;
  s.n = rewards.size();
  const bool constant = std::all_of(rewards.begin(), rewards.end(),
                                    [&](double r) { return r == rewards.front(); });
  if (constant) {
    s.mean = rewards.front();
    s.std = 0.0;
    return s;
  }
  double sum = 0.0;
  for (double r : rewards) sum += r;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (double r : rewards) ss += (r - s.mean) * (r - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

std::vector<StratumStats> scope_stats_per_entry(const RewardBatch& batch, Scope scope) {
  std::map<std::int64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < batch.size(); ++i) groups[scope_prompt(batch[i], scope)].push_back(i);
  std::vector<StratumStats> out(batch.size());
  for (const auto& [prompt, idx] : groups) {
    const auto stats = stratum_stats(gather(batch, idx));
    for (auto i : idx) out[i] = stats;
  }
  return out;
}

AdvantageVector adv_global(const RewardBatch& batch, Scope scope) {
  AdvantageVector a{Estimator::Global, std::vector<double>(batch.size()), 0.0, 1.0};
  const auto stats = scope_stats_per_entry(batch, scope);
  for (std::size_t i = 0; i < batch.size(); ++i) a.values[i] = batch[i].reward - stats[i].mean;
  return a;
}

AdvantageVector adv_stratified(const RewardBatch& batch, const StratumPartition& partition) {
  if (partition.covered() != batch.size()) throw ValidationError("partition does not cover batch");
  AdvantageVector a{Estimator::Stratified, std::vector<double>(batch.size()), 0.0, 1.0};
  for (const auto& [key, idx] : partition.groups) {
    const auto stats = stratum_stats(gather(batch, idx));
    for (auto i : idx) a.values[i] = batch[i].reward - stats.mean;
  }
  return a;
}

AdvantageVector adv_san(const RewardBatch& batch, const StratumPartition& partition,
                        double epsilon) {
  require_epsilon(epsilon);
  if (partition.covered() != batch.size()) throw ValidationError("partition does not cover batch");
  AdvantageVector a{Estimator::SAN, std::vector<double>(batch.size()), epsilon, 1.0};
  for (const auto& [key, idx] : partition.groups) {
    const auto stats = stratum_stats(gather(batch, idx));
    const double denom = checked_denominator(stats.std, epsilon, "adv_san");
    for (auto i : idx) a.values[i] = (batch[i].reward - stats.mean) / denom;
  }
  return a;
}

AdvantageVector adv_gn(const RewardBatch& batch, Scope scope, double epsilon) {
  require_epsilon(epsilon);
  AdvantageVector a{Estimator::GN, std::vector<double>(batch.size()), epsilon, 0.0};
  const auto stats = scope_stats_per_entry(batch, scope);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double denom = checked_denominator(stats[i].std, epsilon, "adv_gn");
    a.values[i] = (batch[i].reward - stats[i].mean) / denom;
  }
  return a;
}

AdvantageVector adv_blend(const RewardBatch& batch, const StratumPartition& partition,
                          double alpha, double epsilon, Scope gn_scope) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("blend alpha must lie in [0, 1]");
  const auto san = adv_san(batch, partition, epsilon);
  const auto gn = adv_gn(batch, gn_scope, epsilon);
  AdvantageVector a{Estimator::Blend, std::vector<double>(batch.size()), epsilon, alpha};
  // Endpoints are exact copies.
  if (alpha == 1.0) {
    a.values = san.values;
  } else if (alpha == 0.0) {
    a.values = gn.values;
  } else {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      a.values[i] = alpha * san.values[i] + (1.0 - alpha) * gn.values[i];
    }
  }
  return a;
}

AdvantageVector compute_advantages(const RewardBatch& batch, Estimator estimator,
                                   const AdvantageOptions& options) {
  switch (estimator) {
    case Estimator::Global: return adv_global(batch, options.gn_scope);
    case Estimator::Stratified:
      return adv_stratified(batch, stratify(batch, options.stratum_scope));
    case Estimator::GN: return adv_gn(batch, options.gn_scope, options.epsilon);
    case Estimator::SAN:
      return adv_san(batch, stratify(batch, options.stratum_scope), options.epsilon);
    case Estimator::Blend:
      return adv_blend(batch, stratify(batch, options.stratum_scope), options.alpha,
                       options.epsilon, options.gn_scope);
  }
  throw ValidationError("unknown estimator");
}

std::vector<GnDecomposition> decompose_gn(const RewardBatch& batch,
                                          const StratumPartition& partition, double epsilon,
                                          Scope gn_scope) {
  require_epsilon(epsilon);
  if (partition.covered() != batch.size()) throw ValidationError("partition does not cover batch");
  const auto global = scope_stats_per_entry(batch, gn_scope);
  std::vector<GnDecomposition> out;
  out.reserve(partition.groups.size());
  for (const auto& [key, idx] : partition.groups) {
    const auto& g = global[idx.front()];
    for (auto i : idx) {
      if (scope_prompt(batch[i], gn_scope) != scope_prompt(batch[idx.front()], gn_scope)) {
        throw ValidationError("decompose_gn: stratum spans several GN scope groups");
      }
    }
    const auto s = stratum_stats(gather(batch, idx));
    const double gd = checked_denominator(g.std, epsilon, "decompose_gn");
    checked_denominator(s.std, epsilon, "decompose_gn");
    out.push_back({key, (s.std + epsilon) / gd, (s.mean - g.mean) / gd});
  }
  return out;
}

}  // namespace spg
