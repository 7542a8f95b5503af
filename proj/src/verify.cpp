#include "spg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "spg/error.hpp"
#include "spg/gradient.hpp"
#include "spg/policy.hpp"
#include "spg/random.hpp"
#include "spg/tolerances.hpp"
#include "spg/variance.hpp"

namespace spg {

namespace {

constexpr double kFault = 1e-3;

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

CheckResult make(std::string name, double residual, double tolerance, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.passed = std::isfinite(residual) && residual <= tolerance;
  r.detail = std::move(detail);
  return r;
}

// Max over the corpus of f(batch), evaluated per batch on either path.
double corpus_max(const std::vector<RewardBatch>& corpus,
                  const std::function<double(const RewardBatch&)>& f, Exec exec) {
  std::vector<double> out(corpus.size(), 0.0);
  const auto n = static_cast<std::int64_t>(corpus.size());
  if (exec == Exec::OpenMP) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        out[i] = f(corpus[i]);
      } catch (...) {
        out[i] = std::numeric_limits<double>::infinity();
      }
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(corpus[i]);
  }
  double m = 0.0;
  for (double v : out) m = std::max(m, std::isnan(v) ? std::numeric_limits<double>::infinity() : v);
  return m;
}

std::vector<TabularPolicy> random_policies(const VerifyOptions& o) {
  std::vector<TabularPolicy> out;
  for (std::size_t i = 0; i < o.random_thetas; ++i) {
    Rng rng = make_stream(o.seed, 0x7e7a, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> theta(kNumActions * TabularPolicy::num_states(o.env.max_turns));
    for (auto& v : theta) v = normal(rng);
    out.emplace_back(o.env.max_turns, std::move(theta));
  }
  return out;
}

}  // namespace

std::vector<RewardBatch> random_batch_corpus(std::size_t count, std::uint64_t seed,
                                             CorpusKind kind) {
  std::vector<RewardBatch> corpus;
  corpus.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    Rng rng = make_stream(seed, kind == CorpusKind::Continuous ? 1 : 2, b);
    const std::size_t k = uniform_int(rng, 2, 64);
    std::vector<double> rewards(k);
    std::vector<std::uint32_t> strata(k);
    if (kind == CorpusKind::Binary) {
      const std::size_t n_strata = uniform_int(rng, 1, 8);
      for (std::size_t i = 0; i < k; ++i) {
        strata[i] = static_cast<std::uint32_t>(uniform_int(rng, 0, n_strata - 1));
        rewards[i] = bernoulli(rng, 0.2 + 0.1 * strata[i]) ? 1.0 : 0.0;
      }
    } else {
      const std::size_t n_strata = uniform_int(rng, 1, std::min<std::size_t>(8, k / 2));
      // Round-robin assignment gives every stratum at least two entries.
      for (std::size_t i = 0; i < k; ++i) strata[i] = static_cast<std::uint32_t>(i % n_strata);
      if (b % 10 == 9) {
        // Equal means: integer pairs m +/- d around a shared m, plus m itself for an odd tail.
        const double m = static_cast<double>(uniform_int(rng, 0, 8)) - 4.0;
        std::map<std::uint32_t, std::vector<std::size_t>> members;
        for (std::size_t i = 0; i < k; ++i) members[strata[i]].push_back(i);
        for (auto& [s, idx] : members) {
          std::size_t j = 0;
          for (; j + 1 < idx.size(); j += 2) {
            const double d = static_cast<double>(uniform_int(rng, 1, 5));
            rewards[idx[j]] = m + d;
            rewards[idx[j + 1]] = m - d;
          }
          if (j < idx.size()) rewards[idx[j]] = m;
        }
      } else {
        for (std::size_t i = 0; i < k; ++i) {
          rewards[i] = 2.0 * static_cast<double>(strata[i]) + (uniform01(rng) * 6.0 - 3.0);
        }
      }
    }
    corpus.push_back(RewardBatch::single_prompt(rewards, strata));
  }
  return corpus;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const CheckResult& VerifyReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw ValidationError("no check named '" + name + "'");
}

CheckResult check_prop1(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
    const auto corpus = random_batch_corpus(o.batches, o.seed, kind);
    worst = std::max(worst, corpus_max(corpus, [&](const RewardBatch& b) {
      const auto part = stratify(b);
      const auto g = adv_global(b).values;
      const auto s = adv_stratified(b, part).values;
      const double global_mean = stratum_stats(b.rewards()).mean;
      double m = 0.0;
      for (const auto& [key, idx] : part.groups) {
        std::vector<double> r;
        for (auto i : idx) r.push_back(b[i].reward);
        const double offset = stratum_stats(r).mean - global_mean;
        for (auto i : idx) m = std::max(m, std::abs((g[i] - s[i] + fault) - offset));
      }
      return m;
    }, o.exec));
  }
  return make("prop1", worst, tol::kAdvantageIdentity,
              "max |(A_G - A_S) - (mean_k - mean_global)| over two corpora");
}

CheckResult check_thm1(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  std::size_t branch_errors = 0;
  for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
    const auto corpus = random_batch_corpus(o.batches, o.seed, kind);
    worst = std::max(worst, corpus_max(corpus, [&](const RewardBatch& b) {
      const auto rep = variance_decomposition(b, stratify(b));
      double zero_mean = 0.0;
      for (double v : adv_global(b).values) zero_mean += v;
      double strat_sum = 0.0;
      for (double v : adv_stratified(b, stratify(b)).values) strat_sum += v;
      return std::max({std::abs(rep.stratified_residual() + fault), -rep.between_stratum,
                       std::abs(zero_mean) / static_cast<double>(b.size()),
                       std::abs(strat_sum) / static_cast<double>(b.size())});
    }, o.exec));
    // Equality branch: between == 0 exactly when the stratum means coincide.
    for (const auto& b : corpus) {
      const auto part = stratify(b);
      std::vector<double> means;
      for (const auto& [key, idx] : part.groups) {
        std::vector<double> r;
        for (auto i : idx) r.push_back(b[i].reward);
        means.push_back(stratum_stats(r).mean);
      }
      const bool equal = std::all_of(means.begin(), means.end(), [&](double m) {
        return std::abs(m - means.front()) <= tol::kAdvantageIdentity;
      });
      const double between = variance_decomposition(b, part).between_stratum;
      if (equal != (between <= tol::kVarianceIdentity)) ++branch_errors;
    }
  }
  if (branch_errors > 0) worst = std::numeric_limits<double>::infinity();
  return make("thm1", worst, tol::kVarianceIdentity,
              "max |Var_G - Var_S - between| with between >= 0; equality branch mismatches: " +
                  std::to_string(branch_errors));
}

CheckResult check_thm2(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (double eps : {0.0, 1e-6, 0.1}) {
    for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
      if (eps == 0.0 && kind == CorpusKind::Binary) continue;  // SAN undefined on constant strata
      const auto corpus = random_batch_corpus(o.batches, o.seed, kind);
      worst = std::max(worst, corpus_max(corpus, [&](const RewardBatch& b) {
        return std::abs(san_variance_decomposition(b, stratify(b), eps).san_residual() + fault);
      }, o.exec));
    }
  }
  return make("thm2", worst, tol::kVarianceIdentity,
              "max |(Var_G - Var_SAN) - (TermA + TermB)|, eps in {0, 1e-6, 0.1}");
}

CheckResult check_prop3(const VerifyOptions& o, double fault) {
  const auto corpus = random_batch_corpus(o.batches, o.seed, CorpusKind::Continuous);
  double worst = 0.0;
  for (std::size_t m = 0; m < o.affine_maps; ++m) {
    Rng rng = make_stream(o.seed, 0xaff1, m);
    const double a = 10.0 * (1.0 - uniform01(rng));  // (0, 10]
    const double c = 20.0 * uniform01(rng) - 10.0;   // [-10, 10)
    const auto& b = corpus[m % corpus.size()];
    std::vector<RewardEntry> shifted(b.entries().begin(), b.entries().end());
    for (auto& e : shifted) e.reward = a * e.reward + c;
    const RewardBatch t(std::move(shifted));
    const auto base = adv_san(b, stratify(b), 0.0).values;
    const auto mapped = adv_san(t, stratify(t), 0.0).values;
    for (std::size_t i = 0; i < base.size(); ++i) {
      worst = std::max(worst, std::abs(mapped[i] + fault - base[i]));
    }
  }
  return make("prop3", worst, tol::kAffineInvariance,
              "max |SAN(aR+b) - SAN(R)|, eps = 0, " + std::to_string(o.affine_maps) + " maps");
}

CheckResult check_prop5(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (double eps : {0.0, 1e-6, 0.1}) {
    for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
      if (eps == 0.0 && kind == CorpusKind::Binary) continue;
      const auto corpus = random_batch_corpus(o.batches, o.seed, kind);
      worst = std::max(worst, corpus_max(corpus, [&](const RewardBatch& b) {
        const auto part = stratify(b);
        const auto san = adv_san(b, part, eps).values;
        const auto gn = adv_gn(b, Scope::PerPrompt, eps).values;
        double m = 0.0;
        for (const auto& d : decompose_gn(b, part, eps)) {
          for (auto i : part.groups.at(d.key)) {
            m = std::max(m, std::abs(d.scale * san[i] + d.offset + fault - gn[i]));
          }
        }
        return m;
      }, o.exec));
    }
  }
  return make("prop5", worst, tol::kAdvantageIdentity,
              "max |alpha_k A_SAN + Delta_k - A_GN|, eps in {0, 1e-6, 0.1}");
}

CheckResult check_thm3(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (const auto& policy : random_policies(o)) {
    for (double eps : {1e-6, 0.1}) {
      const auto lhs = population_san_gradient(policy, o.env, eps).values;
      auto rhs = weighted_stratum_gradient(policy, o.env, eps).values;
      for (auto& v : rhs) v += fault;
      worst = std::max(worst, max_abs_diff(lhs, rhs));
    }
  }
  return make("thm3", worst, tol::kPopulationGradient,
              "max ||E[A_SAN score] - sum_k p_k/(sigma_k+eps) grad mu_k||_inf, " +
                  std::to_string(o.random_thetas) + " thetas, eps in {1e-6, 0.1}");
}

namespace {

std::vector<RewardLaw> moment_laws(const VerifyOptions& o) {
  std::vector<RewardLaw> laws;
  RewardLaw two;
  two.strata.push_back({0, 0.5, {{0.0, 0.5}, {2.0, 0.5}}});
  two.strata.push_back({1, 0.5, {{4.0, 0.5}, {6.0, 0.5}}});
  laws.push_back(two);
  for (const auto& policy : random_policies(o)) {
    laws.push_back(reward_law(enumerate(o.env, std::cref(policy))));
  }
  return laws;
}

}  // namespace

CheckResult check_thm5(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (const auto& law : moment_laws(o)) {
    const auto got = moment_table(law);
    const auto want = moment_table_closed_form(law);
    for (std::size_t k = 0; k < got.strata.size(); ++k) {
      const auto& g = got.strata[k];
      const auto& w = want.strata[k];
      worst = std::max({worst, std::abs(g.mean_san + fault - w.mean_san),
                        std::abs(g.var_san - w.var_san), std::abs(g.mean_gn - w.mean_gn),
                        std::abs(g.var_gn - w.var_gn)});
    }
  }
  return make("thm5", worst, tol::kMomentTable,
              "conditional SAN/GN moments by enumeration vs closed form");
}

CheckResult check_thm6(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (const auto& law : moment_laws(o)) {
    const auto t = moment_table(law);
    worst = std::max({worst, std::abs(t.global_mean_san + fault), std::abs(t.global_mean_gn),
                      std::abs(t.global_var_san - 1.0), std::abs(t.global_var_gn - 1.0)});
  }
  return make("thm6", worst, tol::kMomentTable, "global SAN/GN means 0 and variances 1");
}

CheckResult check_eq4(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  const auto policies = random_policies(o);
  for (std::size_t i = 0; i < policies.size(); ++i) {
    std::vector<RolloutRequest> req;
    for (std::int64_t p = 0; p < 4; ++p) {
      for (int g = 0; g < 8; ++g) req.push_back({&o.env, p});
    }
    const auto batch = collect_rollouts(req, policies[i], o.seed, 0xe94 + i, o.exec);
    for (double eps : {1e-6, 0.1}) {
      for (auto scope : {Scope::PerPrompt, Scope::WholeBatch}) {
        const auto split = gn_gradient_split(batch, policies[i], eps, scope);
        std::vector<double> sum(split.gn.size());
        for (std::size_t j = 0; j < sum.size(); ++j) {
          sum[j] = split.san_part[j] + split.offset_part[j] + fault;
        }
        worst = std::max(worst, max_abs_diff(sum, split.gn));
      }
    }
  }
  return make("eq4", worst, tol::kGradientSplit,
              "max |scaled-SAN part + offset part - g_GN| on seeded SearchWorld batches");
}

CheckResult check_blend_endpoints(const VerifyOptions& o, double fault) {
  double worst = 0.0;
  for (auto kind : {CorpusKind::Continuous, CorpusKind::Binary}) {
    const auto corpus = random_batch_corpus(o.batches, o.seed, kind);
    worst = std::max(worst, corpus_max(corpus, [&](const RewardBatch& b) {
      const auto part = stratify(b);
      const auto one = adv_blend(b, part, 1.0, kDefaultEpsilon).values;
      const auto zero = adv_blend(b, part, 0.0, kDefaultEpsilon).values;
      const auto san = adv_san(b, part, kDefaultEpsilon).values;
      const auto gn = adv_gn(b, Scope::PerPrompt, kDefaultEpsilon).values;
      double m = 0.0;
      for (std::size_t i = 0; i < b.size(); ++i) {
        m = std::max({m, std::abs(one[i] + fault - san[i]), std::abs(zero[i] - gn[i])});
      }
      return m;
    }, o.exec));
  }
  return make("blend_endpoints", worst, 0.0, "blend(1) == SAN and blend(0) == GN exactly");
}

VerifyReport run_verify(const VerifyOptions& options) {
  using Check = CheckResult (*)(const VerifyOptions&, double);
  static const std::pair<const char*, Check> table[] = {
      {"prop1", check_prop1}, {"thm1", check_thm1},   {"thm2", check_thm2},
      {"prop3", check_prop3}, {"prop5", check_prop5}, {"thm3", check_thm3},
      {"thm5", check_thm5},   {"thm6", check_thm6},   {"eq4", check_eq4},
      {"blend_endpoints", check_blend_endpoints}};
  if (options.perturb) {
    const bool known = std::any_of(std::begin(table), std::end(table),
                                   [&](const auto& e) { return *options.perturb == e.first; });
    if (!known) throw ValidationError("unknown check '" + *options.perturb + "' for --perturb");
  }
  options.env.validate();
  VerifyReport report;
  for (const auto& [name, fn] : table) {
    const double fault = options.perturb && *options.perturb == name ? kFault : 0.0;
    report.checks.push_back(fn(options, fault));
  }
  return report;
}

}  // namespace spg
