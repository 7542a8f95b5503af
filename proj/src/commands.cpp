#include "spg/commands.hpp"

#include <cstdlib>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>

#include "spg/analyze.hpp"
#include "spg/error.hpp"

namespace spg {

namespace {

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config field '") + key + "': " + e.what());
  }
}

Exec parse_exec(const std::string& s) {
  if (s == "serial") return Exec::Serial;
  if (s == "openmp") return Exec::OpenMP;
  throw ValidationError("exec must be 'serial' or 'openmp'");
}

std::string run_label(double alpha) { return "alpha_" + format_double(alpha); }

void write_run(const std::filesystem::path& dir, const TrainConfig& tc, const TrainHistory& h) {
  std::ostringstream jsonl, csv;
  write_history_jsonl(jsonl, h);
  write_history_csv(csv, h, tc.prompts.front().max_turns);
  write_text_file(dir / "history.jsonl", jsonl.str());
  write_text_file(dir / "history.csv", csv.str());
  json cfg{{"version", version_string()}, {"config", to_json(tc)}};
  write_text_file(dir / "config.json", cfg.dump(2) + "\n");
}

struct Job {
  TrainConfig config;
  std::filesystem::path dir;
  RunSummaryRow row;
};

std::vector<RunSummaryRow> run_jobs(std::vector<Job>& jobs, const RunConfig& rc,
                                    const std::filesystem::path& summary_path,
                                    bool with_alpha) {
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) if (rc.exec == Exec::OpenMP)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      auto& job = jobs[i];
      std::ostringstream log;
      BatchObserver observer;
      if (rc.export_trajectories) {
        observer = [&log](int it, std::span<const Trajectory> batch) {
          for (const auto& t : batch) log << to_json(t, it).dump() << '\n';
        };
      }
      const auto h = train(job.config, observer);
      write_run(job.dir, job.config, h);
      if (rc.export_trajectories) write_text_file(job.dir / "trajectories.jsonl", log.str());
      if (!h.records.empty()) {
        job.row.final_expected_reward = h.records.back().expected_reward;
        job.row.final_mean_search_count = h.records.back().mean_search_count;
      } else {
        job.row.final_expected_reward = mean_expected_reward(job.config.prompts, h.final_policy);
        job.row.final_mean_search_count = mean_search_count(job.config.prompts, h.final_policy);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::ostringstream csv;
  csv << (with_alpha ? "alpha," : "estimator,")
      << "seed,final_expected_reward,final_mean_search_count\n";
  std::vector<RunSummaryRow> rows;
  for (const auto& job : jobs) {
    csv << (with_alpha ? format_double(job.row.alpha) : job.row.estimator) << ',' << job.row.seed
        << ',' << format_double(job.row.final_expected_reward) << ','
        << format_double(job.row.final_mean_search_count) << '\n';
    rows.push_back(job.row);
  }
  write_text_file(summary_path, csv.str());
  return rows;
}

}  // namespace

void RunConfig::validate() const {
  if (estimators.empty()) throw ValidationError("config: no estimators");
  if (seeds.empty()) throw ValidationError("config: no seeds");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("config: alpha grid must lie in [0, 1]");
  }
  if (verify_batches == 0) throw ValidationError("config: verify batches must be positive");
  for (auto e : estimators) train_config(e, seeds.front()).validate();
}

TrainConfig RunConfig::train_config(Estimator estimator, std::uint64_t seed) const {
  TrainConfig c;
  c.prompts = prompts;
  c.estimator = estimator;
  c.alpha = alpha;
  c.epsilon = epsilon;
  c.gn_scope = gn_scope;
  c.prompts_per_step = prompts_per_step;
  c.rollouts_per_prompt = rollouts_per_prompt;
  c.lr = lr;
  c.iters = iters;
  c.seed = seed;
  c.init_search_bias = init_search_bias;
  c.temperature = temperature;
  c.exec = exec;
  return c;
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("config must be a JSON object");
  static const std::set<std::string> known{
      "env",     "prompts", "estimator",        "estimators",  "alpha",
      "epsilon", "gn_scope", "prompts_per_step", "rollouts_per_prompt", "lr",
      "iters",   "seeds",   "alphas",           "init_search_bias", "temperature",
      "output_dir", "export_trajectories", "exec", "verify"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw SchemaError("unknown config field '" + key + "'");
  }
  RunConfig c;
  if (j.contains("env") && j.contains("prompts")) {
    throw SchemaError("config: give either 'env' or 'prompts', not both");
  }
  if (j.contains("env")) c.prompts = {env_from_json(j["env"])};
  if (j.contains("prompts")) {
    if (!j["prompts"].is_array() || j["prompts"].empty()) {
      throw SchemaError("config: 'prompts' must be a non-empty array");
    }
    c.prompts.clear();
    for (const auto& p : j["prompts"]) c.prompts.push_back(env_from_json(p));
  }
  if (j.contains("estimator")) c.estimators = {parse_estimator(get<std::string>(j, "estimator", ""))};
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& e : get<std::vector<std::string>>(j, "estimators", {})) {
      c.estimators.push_back(parse_estimator(e));
    }
  }
  c.alpha = get(j, "alpha", c.alpha);
  c.epsilon = get(j, "epsilon", c.epsilon);
  if (j.contains("gn_scope")) c.gn_scope = parse_scope(get<std::string>(j, "gn_scope", ""));
  c.prompts_per_step = get(j, "prompts_per_step", c.prompts_per_step);
  c.rollouts_per_prompt = get(j, "rollouts_per_prompt", c.rollouts_per_prompt);
  c.lr = get(j, "lr", c.lr);
  c.iters = get(j, "iters", c.iters);
  c.seeds = get(j, "seeds", c.seeds);
  c.alphas = get(j, "alphas", c.alphas);
  c.init_search_bias = get(j, "init_search_bias", c.init_search_bias);
  c.temperature = get(j, "temperature", c.temperature);
  c.output_dir = get(j, "output_dir", c.output_dir);
  c.export_trajectories = get(j, "export_trajectories", c.export_trajectories);
  if (j.contains("exec")) c.exec = parse_exec(get<std::string>(j, "exec", ""));
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    c.verify_seed = get(v, "seed", c.verify_seed);
    c.verify_batches = get(v, "batches", c.verify_batches);
  }
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json prompts = json::array();
  for (const auto& p : c.prompts) prompts.push_back(to_json(p));
  json estimators = json::array();
  for (auto e : c.estimators) estimators.push_back(std::string(to_string(e)));
  return json{{"prompts", prompts},
              {"estimators", estimators},
              {"alpha", c.alpha},
              {"epsilon", c.epsilon},
              {"gn_scope", std::string(to_string(c.gn_scope))},
              {"prompts_per_step", c.prompts_per_step},
              {"rollouts_per_prompt", c.rollouts_per_prompt},
              {"lr", c.lr},
              {"iters", c.iters},
              {"seeds", c.seeds},
              {"alphas", c.alphas},
              {"init_search_bias", c.init_search_bias},
              {"temperature", c.temperature},
              {"output_dir", resolve_output_dir(c).string()},
              {"export_trajectories", c.export_trajectories},
              {"exec", c.exec == Exec::OpenMP ? "openmp" : "serial"},
              {"verify", {{"seed", c.verify_seed}, {"batches", c.verify_batches}}}};
}

std::filesystem::path resolve_output_dir(const RunConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv("SPG_OUTPUT_DIR"); env && *env) return env;
  return "spg_out";
}

json to_json(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"status", c.passed ? "pass" : "fail"},
                      {"residual", c.residual},
                      {"tolerance", c.tolerance},
                      {"detail", c.detail}});
  }
  return json{{"status", r.passed() ? "pass" : "fail"}, {"checks", checks}};
}

VerifyReport cmd_verify(const RunConfig& config, const std::optional<std::string>& perturb) {
  const auto out = resolve_output_dir(config);
  ensure_writable_dir(out);
  VerifyOptions o;
  o.seed = config.verify_seed;
  o.batches = config.verify_batches;
  o.env = config.prompts.front();
  o.perturb = perturb;
  o.exec = config.exec;
  const auto report = run_verify(o);
  json j = to_json(report);
  j["version"] = version_string();
  j["config"] = to_json(config);
  if (perturb) j["perturb"] = *perturb;
  write_text_file(out / "verify_report.json", j.dump(2) + "\n");
  return report;
}

std::vector<RunSummaryRow> cmd_train(const RunConfig& config) {
  config.validate();
  const auto out = resolve_output_dir(config) / "train";
  ensure_writable_dir(out);
  write_text_file(out / "run_config.json",
                  json{{"version", version_string()}, {"config", to_json(config)}}.dump(2) + "\n");
  std::vector<Job> jobs;
  for (auto e : config.estimators) {
    for (auto s : config.seeds) {
      Job job{config.train_config(e, s), out / std::string(to_string(e)) /
                                             ("seed_" + std::to_string(s)), {}};
      job.row.estimator = std::string(to_string(e));
      job.row.alpha = config.alpha;
      job.row.seed = s;
      jobs.push_back(std::move(job));
    }
  }
  return run_jobs(jobs, config, out / "summary.csv", false);
}

std::vector<RunSummaryRow> cmd_sweep(const RunConfig& config) {
  config.validate();
  if (config.alphas.empty()) throw ValidationError("sweep: alpha grid is empty");
  const auto out = resolve_output_dir(config) / "sweep";
  ensure_writable_dir(out);
  write_text_file(out / "run_config.json",
                  json{{"version", version_string()}, {"config", to_json(config)}}.dump(2) + "\n");
  std::vector<Job> jobs;
  for (double a : config.alphas) {
    for (auto s : config.seeds) {
      Job job{config.train_config(Estimator::Blend, s),
              out / run_label(a) / ("seed_" + std::to_string(s)), {}};
      job.config.alpha = a;
      job.row.estimator = "blend";
      job.row.alpha = a;
      job.row.seed = s;
      jobs.push_back(std::move(job));
    }
  }
  return run_jobs(jobs, config, out / "summary.csv", true);
}

std::size_t cmd_analyze(const std::filesystem::path& log_path, const RunConfig& config) {
  std::ifstream is(log_path);
  if (!is) throw IoError("cannot open log '" + log_path.string() + "'");
  const auto batches = read_reward_log(is);
  const auto out = resolve_output_dir(config) / "analyze";
  ensure_writable_dir(out);
  AdvantageOptions opts{config.epsilon, config.alpha, config.gn_scope, Scope::PerPrompt};
  std::vector<BatchAnalysis> analyses;
  for (const auto& b : batches) analyses.push_back(analyze_batch(b.label, b.rewards, opts));
  json j{{"version", version_string()},
         {"config", to_json(config)},
         {"log", log_path.string()},
         {"batches", json::array()}};
  for (const auto& a : analyses) j["batches"].push_back(to_json(a));
  write_text_file(out / "analysis.json", j.dump(2) + "\n");
  std::ostringstream csv, offsets;
  write_analysis_csv(csv, analyses);
  write_offsets_csv(offsets, analyses);
  write_text_file(out / "analysis.csv", csv.str());
  write_text_file(out / "offsets.csv", offsets.str());
  return analyses.size();
}

}  // namespace spg
