#include "spg/variance.hpp"

#include <cmath>
#include <map>

#include "spg/error.hpp"
#include "spg/random.hpp"

namespace spg {

double empirical_variance(std::span<const double> values) {
  if (values.empty()) throw ValidationError("empirical_variance: empty list");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size());
}

namespace {

struct StratumSummary {
  StratumStats stats;
  StratumStats reference;  // scope group the stratum belongs to
};

std::vector<StratumSummary> summarize(const RewardBatch& batch, const StratumPartition& partition) {
  const auto reference = scope_stats_per_entry(batch, partition.scope);
  std::vector<StratumSummary> out;
  out.reserve(partition.groups.size());
  for (const auto& [key, idx] : partition.groups) {
    std::vector<double> r;
    r.reserve(idx.size());
    for (auto i : idx) r.push_back(batch[i].reward);
    out.push_back({stratum_stats(r), reference[idx.front()]});
  }
  return out;
}

}  // namespace

VarianceReport variance_decomposition(const RewardBatch& batch,
                                      const StratumPartition& partition) {
  if (partition.covered() != batch.size()) throw ValidationError("partition does not cover batch");
  VarianceReport rep;
  rep.var_global = empirical_variance(adv_global(batch, partition.scope).values);
  rep.var_stratified = empirical_variance(adv_stratified(batch, partition).values);
  const double k = static_cast<double>(batch.size());
  for (const auto& s : summarize(batch, partition)) {
    const double d = s.stats.mean - s.reference.mean;
    rep.between_stratum += static_cast<double>(s.stats.n) * d * d / k;
  }
  return rep;
}

VarianceReport san_variance_decomposition(const RewardBatch& batch,
                                          const StratumPartition& partition, double epsilon) {
  auto rep = variance_decomposition(batch, partition);
  rep.var_san = empirical_variance(adv_san(batch, partition, epsilon).values);
  const double k = static_cast<double>(batch.size());
  for (const auto& s : summarize(batch, partition)) {
    const double sd = s.stats.std;
    if (sd == 0.0) continue;  // the term carries a factor sd^2
    const double scaled = 1.0 / ((sd + epsilon) * (sd + epsilon));
    rep.normalization_effect += static_cast<double>(s.stats.n) * sd * sd * (1.0 - scaled) / k;
  }
  return rep;
}

namespace {

struct Population {
  std::vector<double> mu;
  std::vector<double> sigma;
  double mu_all = 0.0;
  double sigma_all = 0.0;
};

void validate_law(const RewardLaw& law) {
  if (law.strata.empty()) throw ValidationError("reward law has no strata");
  double total = 0.0;
  for (const auto& s : law.strata) {
    if (!(s.probability > 0.0 && s.probability <= 1.0)) {
      throw ValidationError("stratum probability outside (0, 1]");
    }
    if (s.outcomes.empty()) throw ValidationError("stratum has no outcomes");
    double c = 0.0;
    for (const auto& [r, p] : s.outcomes) {
      if (!(p >= 0.0) || !std::isfinite(r)) throw ValidationError("bad outcome in reward law");
      c += p;
    }
    if (std::abs(c - 1.0) > 1e-9) throw ValidationError("conditional reward law must sum to 1");
    total += s.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("stratum probabilities must sum to 1");
}

Population population(const RewardLaw& law) {
  validate_law(law);
  Population pop;
  for (const auto& s : law.strata) {
    double m = 0.0;
    for (const auto& [r, p] : s.outcomes) m += p * r;
    double v = 0.0;
    for (const auto& [r, p] : s.outcomes) v += p * (r - m) * (r - m);
    pop.mu.push_back(m);
    pop.sigma.push_back(std::sqrt(v));
    if (v == 0.0) {
      throw DivisionByZeroError("moment table: stratum " + std::to_string(s.key) +
                                " has zero reward variance");
    }
    pop.mu_all += s.probability * m;
  }
  double v = 0.0;
  for (std::size_t k = 0; k < law.strata.size(); ++k) {
    for (const auto& [r, p] : law.strata[k].outcomes) {
      v += law.strata[k].probability * p * (r - pop.mu_all) * (r - pop.mu_all);
    }
  }
  pop.sigma_all = std::sqrt(v);
  return pop;
}

}  // namespace

MomentTable moment_table(const RewardLaw& law) {
  const auto pop = population(law);
  MomentTable t;
  t.mu = pop.mu_all;
  t.sigma = pop.sigma_all;
  for (std::size_t k = 0; k < law.strata.size(); ++k) {
    const auto& s = law.strata[k];
    StratumMoments m;
    m.key = s.key;
    m.probability = s.probability;
    m.mu = pop.mu[k];
    m.sigma = pop.sigma[k];
    for (const auto& [r, p] : s.outcomes) {
      m.mean_san += p * (r - pop.mu[k]) / pop.sigma[k];
      m.mean_gn += p * (r - pop.mu_all) / pop.sigma_all;
    }
    for (const auto& [r, p] : s.outcomes) {
      const double a_san = (r - pop.mu[k]) / pop.sigma[k];
      const double a_gn = (r - pop.mu_all) / pop.sigma_all;
      m.var_san += p * (a_san - m.mean_san) * (a_san - m.mean_san);
      m.var_gn += p * (a_gn - m.mean_gn) * (a_gn - m.mean_gn);
      t.global_mean_san += s.probability * p * a_san;
      t.global_mean_gn += s.probability * p * a_gn;
    }
    t.strata.push_back(m);
  }
  for (std::size_t k = 0; k < law.strata.size(); ++k) {
    const auto& s = law.strata[k];
    for (const auto& [r, p] : s.outcomes) {
      const double a_san = (r - pop.mu[k]) / pop.sigma[k] - t.global_mean_san;
      const double a_gn = (r - pop.mu_all) / pop.sigma_all - t.global_mean_gn;
      t.global_var_san += s.probability * p * a_san * a_san;
      t.global_var_gn += s.probability * p * a_gn * a_gn;
    }
  }
  return t;
}

MomentTable moment_table_closed_form(const RewardLaw& law) {
  const auto pop = population(law);
  MomentTable t;
  t.mu = pop.mu_all;
  t.sigma = pop.sigma_all;
  for (std::size_t k = 0; k < law.strata.size(); ++k) {
    StratumMoments m;
    m.key = law.strata[k].key;
    m.probability = law.strata[k].probability;
    m.mu = pop.mu[k];
    m.sigma = pop.sigma[k];
    m.mean_san = 0.0;
    m.var_san = 1.0;
    m.mean_gn = (pop.mu[k] - pop.mu_all) / pop.sigma_all;
    m.var_gn = (pop.sigma[k] * pop.sigma[k]) / (pop.sigma_all * pop.sigma_all);
    t.strata.push_back(m);
  }
  t.global_mean_san = 0.0;
  t.global_var_san = 1.0;
  t.global_mean_gn = 0.0;
  t.global_var_gn = 1.0;
  return t;
}

MomentTable moment_table_monte_carlo(const RewardLaw& law, std::size_t samples,
                                     std::uint64_t seed) {
  if (samples < 2) throw ValidationError("moment_table_monte_carlo: need at least 2 samples");
  const auto pop = population(law);
  const std::size_t n_strata = law.strata.size();
  std::vector<double> cnt(n_strata), s_san(n_strata), ss_san(n_strata), s_gn(n_strata),
      ss_gn(n_strata);
  double g_san = 0.0, gg_san = 0.0, g_gn = 0.0, gg_gn = 0.0;
  Rng rng = make_stream(seed, 0, 0);
  for (std::size_t i = 0; i < samples; ++i) {
    double u = uniform01(rng);
    std::size_t k = 0;
    while (k + 1 < n_strata && u >= law.strata[k].probability) {
      u -= law.strata[k].probability;
      ++k;
    }
    const auto& outcomes = law.strata[k].outcomes;
    double w = uniform01(rng);
    std::size_t j = 0;
    while (j + 1 < outcomes.size() && w >= outcomes[j].second) {
      w -= outcomes[j].second;
      ++j;
    }
    const double r = outcomes[j].first;
    const double a_san = (r - pop.mu[k]) / pop.sigma[k];
    const double a_gn = (r - pop.mu_all) / pop.sigma_all;
    cnt[k] += 1.0;
    s_san[k] += a_san;
    ss_san[k] += a_san * a_san;
    s_gn[k] += a_gn;
    ss_gn[k] += a_gn * a_gn;
    g_san += a_san;
    gg_san += a_san * a_san;
    g_gn += a_gn;
    gg_gn += a_gn * a_gn;
  }
  MomentTable t;
  t.mu = pop.mu_all;
  t.sigma = pop.sigma_all;
  for (std::size_t k = 0; k < n_strata; ++k) {
    StratumMoments m;
    m.key = law.strata[k].key;
    m.probability = cnt[k] / static_cast<double>(samples);
    m.mu = pop.mu[k];
    m.sigma = pop.sigma[k];
    if (cnt[k] > 0) {
      m.mean_san = s_san[k] / cnt[k];
      m.var_san = ss_san[k] / cnt[k] - m.mean_san * m.mean_san;
      m.mean_gn = s_gn[k] / cnt[k];
      m.var_gn = ss_gn[k] / cnt[k] - m.mean_gn * m.mean_gn;
    }
    t.strata.push_back(m);
  }
  const double n = static_cast<double>(samples);
  t.global_mean_san = g_san / n;
  t.global_var_san = gg_san / n - t.global_mean_san * t.global_mean_san;
  t.global_mean_gn = g_gn / n;
  t.global_var_gn = gg_gn / n - t.global_mean_gn * t.global_mean_gn;
  return t;
}

}  // namespace spg
