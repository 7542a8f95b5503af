#include "spg/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "spg/error.hpp"
#include "spg/io.hpp"

namespace spg {

std::vector<LogBatch> read_reward_log(std::istream& is) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<RewardEntry>> rows;
  std::map<std::string, std::int64_t> prompt_ids;
  std::string line;
  std::size_t lineno = 0;
  std::int64_t next_id = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError("malformed JSON row", lineno);
    }
    if (!j.is_object()) throw SchemaError("row is not a JSON object", lineno);
    for (const char* field : {"prompt_id", "stratum_key", "reward"}) {
      if (!j.contains(field)) throw SchemaError(std::string("missing field '") + field + "'", lineno);
    }
    RewardEntry e;
    e.trajectory_id = next_id++;
    const auto& pid = j["prompt_id"];
    if (pid.is_number_integer()) {
      e.prompt_id = pid.get<std::int64_t>();
    } else if (pid.is_string()) {
      // Interned strings get negative ids so they never collide with integer ids.
      auto [it, fresh] = prompt_ids.emplace(pid.get<std::string>(),
                                            -static_cast<std::int64_t>(prompt_ids.size()) - 1);
      e.prompt_id = it->second;
    } else {
      throw SchemaError("prompt_id must be an integer or a string", lineno);
    }
    const auto& key = j["stratum_key"];
    if (!key.is_number_integer() || key.get<std::int64_t>() < 0) {
      throw SchemaError("stratum_key must be a non-negative integer", lineno);
    }
    e.stratum_key = key.get<std::uint32_t>();
    if (!j["reward"].is_number()) throw SchemaError("reward must be a number", lineno);
    e.reward = j["reward"].get<double>();
    if (!std::isfinite(e.reward)) throw SchemaError("reward must be finite", lineno);

    std::string label = "0";
    if (j.contains("batch")) {
      const auto& b = j["batch"];
      if (b.is_string()) {
        label = b.get<std::string>();
      } else if (b.is_number_integer()) {
        label = std::to_string(b.get<std::int64_t>());
      } else {
        throw SchemaError("batch must be an integer or a string", lineno);
      }
    }
    if (!rows.count(label)) order.push_back(label);
    rows[label].push_back(e);
  }
  if (order.empty()) throw SchemaError("log contains no rows");
  std::vector<LogBatch> out;
  for (const auto& label : order) out.push_back({label, RewardBatch(std::move(rows[label]))});
  return out;
}

namespace {

AdvantageSummary summarize(const AdvantageVector& a) {
  AdvantageSummary s;
  s.estimator = a.estimator;
  const auto stats = stratum_stats(a.values);
  s.mean = stats.mean;
  s.std = stats.std;
  s.min = *std::min_element(a.values.begin(), a.values.end());
  s.max = *std::max_element(a.values.begin(), a.values.end());
  return s;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

BatchAnalysis analyze_batch(const std::string& label, const RewardBatch& batch,
                            const AdvantageOptions& options) {
  BatchAnalysis a;
  a.label = label;
  a.size = batch.size();
  const auto part = stratify(batch, options.stratum_scope);
  a.variance = san_variance_decomposition(batch, part, options.epsilon);
  const auto global = scope_stats_per_entry(batch, options.gn_scope);
  for (const auto& d : decompose_gn(batch, part, options.epsilon, options.gn_scope)) {
    const auto& idx = part.groups.at(d.key);
    std::vector<double> r;
    for (auto i : idx) r.push_back(batch[i].reward);
    const auto s = stratum_stats(r);
    OffsetRow row;
    row.key = d.key;
    row.n = s.n;
    row.stratum_mean = s.mean;
    row.global_mean = global[idx.front()].mean;
    row.scale = d.scale;
    row.offset = d.offset;
    row.sign_consistent = sign(d.offset) == sign(s.mean - row.global_mean);
    a.offsets.push_back(row);
  }
  for (auto e : {Estimator::Global, Estimator::Stratified, Estimator::GN, Estimator::SAN,
                 Estimator::Blend}) {
    a.advantages.push_back(summarize(compute_advantages(batch, e, options)));
  }
  return a;
}

json to_json(const BatchAnalysis& a) {
  json offsets = json::array();
  for (const auto& o : a.offsets) {
    offsets.push_back({{"prompt_id", o.key.prompt_id},
                       {"stratum_key", o.key.stratum},
                       {"n", o.n},
                       {"stratum_mean", o.stratum_mean},
                       {"global_mean", o.global_mean},
                       {"alpha_k", o.scale},
                       {"delta_k", o.offset},
                       {"sign_consistent", o.sign_consistent}});
  }
  json adv = json::object();
  for (const auto& s : a.advantages) {
    adv[std::string(to_string(s.estimator))] = {
        {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
  }
  return json{{"batch", a.label},
              {"size", a.size},
              {"variance", to_json(a.variance)},
              {"offsets", offsets},
              {"advantages", adv}};
}

void write_analysis_csv(std::ostream& os, const std::vector<BatchAnalysis>& analyses) {
  os << "batch,size," << variance_csv_header() << '\n';
  for (const auto& a : analyses) {
    os << a.label << ',' << a.size << ',' << variance_csv_row(a.variance) << '\n';
  }
}

void write_offsets_csv(std::ostream& os, const std::vector<BatchAnalysis>& analyses) {
  os << "batch,prompt_id,stratum_key,n,stratum_mean,global_mean,alpha_k,delta_k,sign_consistent\n";
  for (const auto& a : analyses) {
    for (const auto& o : a.offsets) {
      os << a.label << ',' << o.key.prompt_id << ',' << o.key.stratum << ',' << o.n << ','
         << format_double(o.stratum_mean) << ',' << format_double(o.global_mean) << ','
         << format_double(o.scale) << ',' << format_double(o.offset) << ','
         << (o.sign_consistent ? "true" : "false") << '\n';
    }
  }
}

}  // namespace spg
