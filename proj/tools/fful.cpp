#include <CLI11.hpp>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "fful/experiment.hpp"
#include "fful/parallel.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::string mode = "fast_fedul";
  std::string model_path;
  bool include_delta = false;
  long long seed = -1;
};

nlohmann::json merged_config(const GlobalArgs& args) {
  nlohmann::json doc = fful::default_config_json();
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw fful::ConfigError("cannot open config file: " + args.config_path);
    doc.merge_patch(nlohmann::json::parse(in));
  }
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw fful::ConfigError("--set expects key=value, got: " + kv);
    }
    fful::set_config_value(doc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!args.output_dir.empty()) doc["output_dir"] = args.output_dir;
  if (args.seed >= 0) doc["fed"]["seed"] = args.seed;
  return doc;
}

void add_common_options(CLI::App* cmd, GlobalArgs& args) {
  cmd->add_option("--config", args.config_path, "JSON experiment config");
  cmd->add_option("--set", args.overrides, "dotted-path override, key=value (repeatable)");
  cmd->add_option("--output", args.output_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "seed override for fed.seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fful: federated training, unlearning and evaluation"};
  app.require_subcommand(1);

  GlobalArgs args;
  CLI::App* train = app.add_subcommand("train", "train and store sampled client updates");
  CLI::App* unlearn = app.add_subcommand("unlearn", "remove the target client from the checkpoint");
  CLI::App* retrain = app.add_subcommand("retrain", "retrain oracle without the target client");
  CLI::App* evaluate = app.add_subcommand("evaluate", "main/backdoor accuracy of a checkpoint");
  CLI::App* bound = app.add_subcommand("bound", "error bound versus the retrained model");
  CLI::App* compare = app.add_subcommand("compare", "end-to-end comparison table");
  for (CLI::App* cmd : {train, unlearn, retrain, evaluate, bound, compare}) {
    add_common_options(cmd, args);
  }
  unlearn->add_option("--mode", args.mode,
                      "fast_fedul | naive | partial_skew | random_sample_ablation");
  unlearn->add_flag("--include-delta", args.include_delta, "embed the raw delta in the report");
  evaluate->add_option("--model", args.model_path, "checkpoint to evaluate (default: model.bin)");

  CLI11_PARSE(app, argc, argv);

  try {
    const nlohmann::json doc = merged_config(args);
    const fful::ExperimentConfig cfg = fful::parse_config(doc);

    if (train->parsed()) {
      const auto result = fful::cmd_train(cfg, doc);
      std::cout << "wrote " << result.model_path << ", " << result.store_path << " ("
                << result.trace.stored_bytes << " bytes), " << result.manifest_path << "\n";
    } else if (unlearn->parsed()) {
      const fful::UnlearnMode mode = fful::unlearn_mode_from_string(args.mode);
      const auto result = fful::cmd_unlearn(cfg, mode, args.include_delta);
      std::cout << "wrote " << result.model_path << " and " << result.report_path << " ("
                << result.report.wall_time << " s)\n";
    } else if (retrain->parsed()) {
      std::cout << "wrote " << fful::cmd_retrain(cfg) << "\n";
    } else if (evaluate->parsed()) {
      const std::string model_path =
          args.model_path.empty() ? cfg.output_dir + "/model.bin" : args.model_path;
      const std::string report_path = cfg.output_dir + "/eval.json";
      const auto report = fful::cmd_evaluate(cfg, model_path, report_path);
      std::cout << "main_acc=" << report.main_acc << " backdoor_acc=" << report.backdoor_acc
                << " -> " << report_path << "\n";
    } else if (bound->parsed()) {
      const auto result = fful::cmd_bound(cfg);
      std::cout << "K_hat=" << result.lipschitz_hat << " bound=" << result.bound
                << " observed=" << result.observed << " -> " << result.report_path << "\n";
    } else if (compare->parsed()) {
      const auto result = fful::cmd_compare(cfg);
      std::cout << "wrote " << result.csv_path << " and " << result.json_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "fful: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
