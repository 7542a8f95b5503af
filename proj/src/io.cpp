#include "spg/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "spg/error.hpp"

#ifndef SPG_VERSION
#define SPG_VERSION "unknown"
#endif

namespace spg {

std::string version_string() { return SPG_VERSION; }

json to_json(const EnvSpec& s) {
  return json{{"max_turns", s.max_turns},
              {"hops", s.hops},
              {"clue_prob", s.clue_prob},
              {"p_correct_with_clues", s.p_correct_with_clues},
              {"p_guess_base", s.p_guess_base},
              {"p_guess_per_clue", s.p_guess_per_clue},
              {"reward_correct", s.reward_correct},
              {"reward_wrong", s.reward_wrong}};
}

EnvSpec env_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("env spec must be a JSON object");
  static const std::set<std::string> known{"max_turns",        "hops",
                                           "clue_prob",        "p_correct_with_clues",
                                           "p_guess_base",     "p_guess_per_clue",
                                           "reward_correct",   "reward_wrong"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw SchemaError("unknown env field '" + key + "'");
  }
  EnvSpec s;
  try {
    s.max_turns = j.value("max_turns", s.max_turns);
    s.hops = j.value("hops", s.hops);
    s.clue_prob = j.value("clue_prob", s.clue_prob);
    s.p_correct_with_clues = j.value("p_correct_with_clues", s.p_correct_with_clues);
    s.p_guess_base = j.value("p_guess_base", s.p_guess_base);
    s.p_guess_per_clue = j.value("p_guess_per_clue", s.p_guess_per_clue);
    s.reward_correct = j.value("reward_correct", s.reward_correct);
    s.reward_wrong = j.value("reward_wrong", s.reward_wrong);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("env spec: ") + e.what());
  }
  s.validate();
  return s;
}

json to_json(const TrainConfig& c) {
  json prompts = json::array();
  for (const auto& p : c.prompts) prompts.push_back(to_json(p));
  return json{{"prompts", prompts},
              {"estimator", std::string(to_string(c.estimator))},
              {"alpha", c.alpha},
              {"epsilon", c.epsilon},
              {"gn_scope", std::string(to_string(c.gn_scope))},
              {"prompts_per_step", c.prompts_per_step},
              {"rollouts_per_prompt", c.rollouts_per_prompt},
              {"lr", c.lr},
              {"iters", c.iters},
              {"seed", c.seed},
              {"init_search_bias", c.init_search_bias},
              {"temperature", c.temperature}};
}

json to_json(const VarianceReport& r) {
  return json{{"var_global", r.var_global},
              {"var_stratified", r.var_stratified},
              {"var_san", r.var_san},
              {"between_stratum", r.between_stratum},
              {"normalization_effect", r.normalization_effect}};
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string variance_csv_header() {
  std::string h;
  for (const char* f : kVarianceFields) {
    if (!h.empty()) h += ',';
    h += f;
  }
  return h;
}

std::string variance_csv_row(const VarianceReport& r) {
  return format_double(r.var_global) + ',' + format_double(r.var_stratified) + ',' +
         format_double(r.var_san) + ',' + format_double(r.between_stratum) + ',' +
         format_double(r.normalization_effect);
}

json to_json(const MomentTable& t) {
  json strata = json::array();
  for (const auto& s : t.strata) {
    strata.push_back({{"stratum", s.key},
                      {"probability", s.probability},
                      {"mu", s.mu},
                      {"sigma", s.sigma},
                      {"conditional_mean_san", s.mean_san},
                      {"conditional_var_san", s.var_san},
                      {"conditional_mean_gn", s.mean_gn},
                      {"conditional_var_gn", s.var_gn}});
  }
  return json{{"strata", strata},
              {"mu", t.mu},
              {"sigma", t.sigma},
              {"global_mean_san", t.global_mean_san},
              {"global_var_san", t.global_var_san},
              {"global_mean_gn", t.global_mean_gn},
              {"global_var_gn", t.global_var_gn}};
}

nlohmann::ordered_json to_json(const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iter;
  j["expected_reward"] = r.expected_reward;
  j["mean_search_count"] = r.mean_search_count;
  j["batch_reward_mean"] = r.batch_reward_mean;
  j["grad_norm"] = r.grad_norm;
  for (std::size_t k = 0; k < r.stratum_occupancy.size(); ++k) {
    j["p_k" + std::to_string(k)] = r.stratum_occupancy[k];
  }
  return j;
}

void write_history_jsonl(std::ostream& os, const TrainHistory& h) {
  for (const auto& r : h.records) os << to_json(r).dump() << '\n';
}

void write_history_csv(std::ostream& os, const TrainHistory& h, int max_turns) {
  os << "iter,expected_reward,mean_search_count,batch_reward_mean,grad_norm";
  for (int k = 0; k < max_turns; ++k) os << ",p_k" << k;
  os << '\n';
  for (const auto& r : h.records) {
    os << r.iter << ',' << format_double(r.expected_reward) << ','
       << format_double(r.mean_search_count) << ',' << format_double(r.batch_reward_mean) << ','
       << format_double(r.grad_norm);
    for (double p : r.stratum_occupancy) os << ',' << format_double(p);
    os << '\n';
  }
}

json to_json(const Trajectory& t, std::int64_t batch) {
  json actions = json::array();
  for (auto a : t.actions) actions.push_back(a == Action::Search ? "search" : "answer");
  json obs = json::array();
  for (bool o : t.observations) obs.push_back(o);
  return json{{"batch", batch},
              {"prompt_id", t.prompt_id},
              {"actions", actions},
              {"observations", obs},
              {"search_count", t.search_count},
              {"stratum_key", t.search_count},
              {"reward", t.reward},
              {"log_prob", t.log_prob}};
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << contents;
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw SchemaError("'" + path.string() + "': " + e.what());
  }
}

void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec && !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
  const auto probe = dir / ".spg_write_probe";
  {
    std::ofstream os(probe);
    if (!os) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace spg
