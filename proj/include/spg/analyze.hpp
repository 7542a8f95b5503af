#pragma once

// Offline analysis of reward logs: JSONL rows carrying prompt_id, stratum_key and
// reward, grouped into batches by an optional "batch" field.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "spg/advantage.hpp"
#include "spg/variance.hpp"

namespace spg {

struct LogBatch {
  std::string label;  // value of the batch field, or "0" when absent
  RewardBatch rewards;
};

// Rows sharing a batch value form one batch, in order of first appearance.
// prompt_id may be an integer or a string. Throws SchemaError naming the line.
std::vector<LogBatch> read_reward_log(std::istream& is);

struct OffsetRow {
  GroupKey key;
  std::size_t n = 0;
  double stratum_mean = 0.0;
  double global_mean = 0.0;
  double scale = 0.0;   // alpha_k
  double offset = 0.0;  // Delta_k
  bool sign_consistent = true;  // sign(Delta_k) == sign(stratum_mean - global_mean)
};

struct AdvantageSummary {
  Estimator estimator = Estimator::Global;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct BatchAnalysis {
  std::string label;
  std::size_t size = 0;
  VarianceReport variance;
  std::vector<OffsetRow> offsets;
  std::vector<AdvantageSummary> advantages;  // global, stratified, gn, san, blend
};

BatchAnalysis analyze_batch(const std::string& label, const RewardBatch& batch,
                            const AdvantageOptions& options = {});

nlohmann::json to_json(const BatchAnalysis& analysis);

// One row per batch: batch,size,<variance fields>.
void write_analysis_csv(std::ostream& os, const std::vector<BatchAnalysis>& analyses);
// One row per (batch, stratum): batch,prompt_id,stratum_key,n,stratum_mean,global_mean,alpha_k,delta_k,sign_consistent.
void write_offsets_csv(std::ostream& os, const std::vector<BatchAnalysis>& analyses);

}  // namespace spg
