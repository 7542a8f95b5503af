#pragma once

// Serialization of configs, reports, histories and trajectory logs. Field names
// here are part of the external interface and pinned by golden tests.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "spg/search_env.hpp"
#include "spg/train.hpp"
#include "spg/variance.hpp"

namespace spg {

using json = nlohmann::json;

// Version string baked in at configure time (git describe when available).
std::string version_string();

json to_json(const EnvSpec& spec);
// Missing fields keep their defaults; unknown fields are rejected. Validates.
EnvSpec env_from_json(const json& j);

json to_json(const TrainConfig& config);

inline constexpr const char* kVarianceFields[] = {"var_global", "var_stratified", "var_san",
                                                  "between_stratum", "normalization_effect"};
json to_json(const VarianceReport& report);
std::string variance_csv_header();
std::string variance_csv_row(const VarianceReport& report);

json to_json(const MomentTable& table);

// One object per iteration: iter, expected_reward, mean_search_count,
// batch_reward_mean, grad_norm, p_k0 .. p_k{T-1}.
nlohmann::ordered_json to_json(const IterationRecord& record);
void write_history_jsonl(std::ostream& os, const TrainHistory& history);
void write_history_csv(std::ostream& os, const TrainHistory& history, int max_turns);

// Trajectory log row: batch, prompt_id, actions, observations, search_count,
// stratum_key, reward, log_prob.
json to_json(const Trajectory& trajectory, std::int64_t batch);

// Formats a double with the shortest round-trip representation.
std::string format_double(double v);

// Writes `contents` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
json read_json_file(const std::filesystem::path& path);

// Creates `dir` and probes it with a scratch file. Throws IoError when unwritable.
void ensure_writable_dir(const std::filesystem::path& dir);

}  // namespace spg
