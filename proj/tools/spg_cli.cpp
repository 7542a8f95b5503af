// spg: verify identities, train, sweep the blend weight, analyze reward logs.
//
// Exit codes: 0 success, 1 a verify check failed, 2 usage or config error,
// 3 I/O error, 4 other runtime error.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spg/commands.hpp"
#include "spg/error.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string output_dir;
  std::string exec;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config_path, "JSON config file");
  if (config_required) opt->required();
  cmd->add_option("--output-dir", c.output_dir, "output directory (overrides config and SPG_OUTPUT_DIR)");
  cmd->add_option("--exec", c.exec, "serial or openmp")->check(CLI::IsMember({"serial", "openmp"}));
}

spg::RunConfig load(const Common& c) {
  spg::json j = c.config_path.empty() ? spg::json::object() : spg::read_json_file(c.config_path);
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  if (!c.exec.empty()) j["exec"] = c.exec;
  return spg::run_config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stratified advantage estimators on a toy search task"};
  app.set_version_flag("--version", spg::version_string());
  app.require_subcommand(1);

  Common common;

  auto* verify = app.add_subcommand("verify", "check the estimator identities");
  std::string perturb;
  add_common(verify, common, false);
  verify->add_option("--perturb", perturb, "corrupt one named check on purpose");

  auto* train = app.add_subcommand("train", "train a policy per estimator and seed");
  std::string estimator;
  std::vector<std::uint64_t> seeds;
  bool export_trajectories = false;
  add_common(train, common, true);
  train->add_option("--estimator", estimator, "global, stratified, gn, san or blend");
  train->add_option("--seeds", seeds, "seed list");
  train->add_flag("--export-trajectories", export_trajectories, "write trajectories.jsonl per run");

  auto* sweep = app.add_subcommand("sweep", "train blend estimators over an alpha grid");
  std::vector<double> alphas;
  std::vector<std::uint64_t> sweep_seeds;
  add_common(sweep, common, true);
  sweep->add_option("--alphas", alphas, "alpha grid");
  sweep->add_option("--seeds", sweep_seeds, "seed list");

  auto* analyze = app.add_subcommand("analyze", "variance and offset analysis of a reward log");
  std::string log_path;
  add_common(analyze, common, false);
  analyze->add_option("--log", log_path, "JSONL reward log")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*verify) {
      auto config = load(common);
      std::optional<std::string> p;
      if (!perturb.empty()) p = perturb;
      const auto report = spg::cmd_verify(config, p);
      for (const auto& c : report.checks) {
        std::cout << (c.passed ? "pass " : "FAIL ") << c.name << " residual=" << c.residual
                  << " tol=" << c.tolerance << '\n';
      }
      std::cout << "report: " << (spg::resolve_output_dir(config) / "verify_report.json").string()
                << '\n';
      return report.passed() ? 0 : 1;
    }
    if (*train) {
      auto config = load(common);
      if (!estimator.empty()) config.estimators = {spg::parse_estimator(estimator)};
      if (!seeds.empty()) config.seeds = seeds;
      if (export_trajectories) config.export_trajectories = true;
      config.validate();
      for (const auto& r : spg::cmd_train(config)) {
        std::cout << r.estimator << " seed=" << r.seed << " J=" << r.final_expected_reward
                  << " searches=" << r.final_mean_search_count << '\n';
      }
      return 0;
    }
    if (*sweep) {
      auto config = load(common);
      if (!alphas.empty()) config.alphas = alphas;
      if (!sweep_seeds.empty()) config.seeds = sweep_seeds;
      config.validate();
      for (const auto& r : spg::cmd_sweep(config)) {
        std::cout << "alpha=" << r.alpha << " seed=" << r.seed << " J=" << r.final_expected_reward
                  << " searches=" << r.final_mean_search_count << '\n';
      }
      return 0;
    }
    if (*analyze) {
      auto config = load(common);
      const auto n = spg::cmd_analyze(log_path, config);
      std::cout << "analyzed " << n << " batch(es)\n";
      return 0;
    }
  } catch (const spg::IoError& e) {
    std::cerr << "spg: " << e.what() << '\n';
    return 3;
  } catch (const spg::ValidationError& e) {
    std::cerr << "spg: " << e.what() << '\n';
    return 2;
  } catch (const spg::SchemaError& e) {
    std::cerr << "spg: " << e.what() << '\n';
    return 2;
  } catch (const spg::UsageError& e) {
    std::cerr << "spg: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "spg: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
