#pragma once

// The four harness commands behind the `spg` CLI. Each writes its outputs under
// the resolved output directory and embeds the resolved configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spg/io.hpp"
#include "spg/rollouts.hpp"
#include "spg/train.hpp"
#include "spg/verify.hpp"

namespace spg {

struct RunConfig {
  std::vector<EnvSpec> prompts{EnvSpec{}};
  std::vector<Estimator> estimators{Estimator::Blend};
  double alpha = kDefaultAlpha;
  double epsilon = kDefaultEpsilon;
  Scope gn_scope = Scope::PerPrompt;
  int prompts_per_step = 4;
  int rollouts_per_prompt = 8;
  double lr = 0.5;
  int iters = 500;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> alphas{0.0, 0.6, 0.8, 1.0};
  double init_search_bias = 0.0;
  double temperature = 1.0;
  std::string output_dir;  // empty: SPG_OUTPUT_DIR, then "spg_out"
  bool export_trajectories = false;
  Exec exec = Exec::Serial;
  std::uint64_t verify_seed = 7;
  std::size_t verify_batches = 1000;

  void validate() const;
  TrainConfig train_config(Estimator estimator, std::uint64_t seed) const;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig run_config_from_json(const json& j);
json to_json(const RunConfig& config);

std::filesystem::path resolve_output_dir(const RunConfig& config);

VerifyReport cmd_verify(const RunConfig& config, const std::optional<std::string>& perturb);
json to_json(const VerifyReport& report);

struct RunSummaryRow {
  std::string estimator;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double final_expected_reward = 0.0;
  double final_mean_search_count = 0.0;
};

// One run per (estimator, seed) under <out>/train/<estimator>/seed_<s>/, plus
// <out>/train/summary.csv.
std::vector<RunSummaryRow> cmd_train(const RunConfig& config);

// Blend runs for every alpha in the grid under <out>/sweep/alpha_<a>/seed_<s>/,
// plus <out>/sweep/summary.csv with |alphas| x |seeds| rows.
std::vector<RunSummaryRow> cmd_sweep(const RunConfig& config);

// Writes <out>/analyze/{analysis.json, analysis.csv, offsets.csv}. Returns the
// number of batches analyzed.
std::size_t cmd_analyze(const std::filesystem::path& log_path, const RunConfig& config);

}  // namespace spg
