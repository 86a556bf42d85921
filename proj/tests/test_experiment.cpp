#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fful/experiment.hpp"
#include "idx_fixture.hpp"

using namespace fful;

namespace {

ExperimentConfig micro_config(const std::string& out_dir) {
  nlohmann::json doc = default_config_json();
  doc["dataset"]["samples_per_class"] = 60;
  doc["dataset"]["test_samples_per_class"] = 30;
  doc["fed"]["num_clients"] = 4;
  doc["fed"]["sample_size"] = 4;
  doc["fed"]["rounds"] = 3;
  doc["fed"]["batch_size"] = 16;
  doc["backdoor"]["client"] = 3;
  doc["unlearn"]["target_client"] = 3;
  doc["output_dir"] = out_dir;
  return parse_config(doc);
}

std::string fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("default config parses and round-trips through json") {
  const nlohmann::json doc = default_config_json();
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(cfg.fed.num_clients == 10);
  CHECK(cfg.fed.sample_size == 5);
  CHECK(cfg.fed.rounds == 30);
  CHECK(cfg.fed.learning_rate == 0.05);
  CHECK(cfg.unlearn.alpha == 0.05);
  CHECK(cfg.backdoor.has_value());
  CHECK(cfg.backdoor->config.poison_fraction == 0.3);
  const ExperimentConfig again = parse_config(config_json(cfg));
  CHECK(config_json(again) == config_json(cfg));
}

TEST_CASE("set_config_value walks dotted paths and parses json values") {
  nlohmann::json doc = default_config_json();
  set_config_value(doc, "fed.rounds", "50");
  set_config_value(doc, "dataset.spread", "0.45");
  set_config_value(doc, "unlearn.mode", "naive");
  set_config_value(doc, "model.hidden_dims", "[8,4]");
  CHECK(doc["fed"]["rounds"] == 50);
  CHECK(doc["dataset"]["spread"] == 0.45);
  CHECK(doc["unlearn"]["mode"] == "naive");
  CHECK(doc["model"]["hidden_dims"] == nlohmann::json::array({8, 4}));
  CHECK_THROWS_AS(set_config_value(doc, "", "1"), ConfigError);
}

TEST_CASE("config validation errors") {
  nlohmann::json doc = default_config_json();
  doc["dataset"]["type"] = "parquet";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
  doc = default_config_json();
  doc["sampling"] = "sometimes";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
  doc = default_config_json();
  doc["unlearn"]["mode"] = "wipe";
  CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
  doc = default_config_json();
  doc["backdoor"]["client"] = 40;
  CHECK_THROWS_AS(build_scenario(parse_config(doc)), ConfigError);
}

TEST_CASE("blobs scenario has the advertised shape") {
  const ExperimentConfig cfg = micro_config(fresh_dir("fful_scn"));
  const Scenario scenario = build_scenario(cfg);
  CHECK(scenario.fed.clients.size() == 4);
  CHECK(scenario.spec.input_dim == 8);
  CHECK(scenario.spec.num_classes == 2);
  CHECK(scenario.fed.test_main.size() == 60);
  CHECK(scenario.fed.test_backdoor.size() == 30);  // class-0 halves excluded
  for (int label : scenario.fed.test_backdoor.labels) CHECK(label == 0);
}

TEST_CASE("idx scenario loads subsets and reconciles classes") {
  const std::string dir = fresh_dir("fful_idx_scn");
  const std::string ti = dir + "/train_images", tl = dir + "/train_labels";
  const std::string vi = dir + "/test_images", vl = dir + "/test_labels";
  std::vector<unsigned char> pixels, labels;
  for (int i = 0; i < 40; ++i) {
    for (int p = 0; p < 4; ++p) pixels.push_back(static_cast<unsigned char>(i * 5 + p));
    labels.push_back(static_cast<unsigned char>(i % 2));
  }
  fful_test::write_idx_images(ti, 2051, 40, 2, 2, pixels);
  fful_test::write_idx_labels(tl, 2049, 40, labels);
  fful_test::write_idx_images(vi, 2051, 40, 2, 2, pixels);
  fful_test::write_idx_labels(vl, 2049, 40, labels);

  nlohmann::json doc = default_config_json();
  doc["dataset"] = {{"type", "idx"},     {"train_images", ti}, {"train_labels", tl},
                    {"test_images", vi}, {"test_labels", vl},  {"subset", 20}};
  doc["fed"]["num_clients"] = 2;
  doc["fed"]["sample_size"] = 2;
  doc["fed"]["rounds"] = 1;
  doc["backdoor"]["client"] = 1;
  doc["backdoor"]["trigger_pixels"] = nlohmann::json::array({nlohmann::json::array({0, 0})});
  doc["unlearn"]["target_client"] = 1;
  const Scenario scenario = build_scenario(parse_config(doc));
  CHECK(scenario.spec.input_dim == 4);
  std::size_t total = 0;
  for (const auto& client : scenario.fed.clients) total += client.size();
  CHECK(total == 20);
  CHECK(scenario.fed.test_main.size() == 40);

  nlohmann::json missing = doc;
  missing["dataset"]["train_images"] = dir + "/nope";
  try {
    build_scenario(parse_config(missing));
    FAIL("expected a ConfigError naming the missing path");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("cmd_train writes the artifact set deterministically") {
  const std::string dir = fresh_dir("fful_train_cmd");
  const ExperimentConfig cfg = micro_config(dir);
  const nlohmann::json doc = config_json(cfg);
  const TrainResult first = cmd_train(cfg, doc);
  CHECK(std::filesystem::exists(first.model_path));
  CHECK(std::filesystem::exists(first.store_path));
  CHECK(std::filesystem::exists(first.manifest_path));
  CHECK(std::filesystem::file_size(first.store_path) == first.trace.stored_bytes);

  const auto manifest = nlohmann::json::parse(std::ifstream(first.manifest_path));
  CHECK(manifest.at("config") == doc);
  CHECK(manifest.at("stored_bytes") == first.trace.stored_bytes);

  // byte-identical store on a re-run
  std::ifstream s1(first.store_path, std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(s1)), {});
  cmd_train(cfg, doc);
  std::ifstream s2(first.store_path, std::ios::binary);
  const std::string bytes2((std::istreambuf_iterator<char>(s2)), {});
  CHECK(bytes1 == bytes2);
}

TEST_CASE("cmd_unlearn dispatches modes against the stored run") {
  const std::string dir = fresh_dir("fful_unlearn_cmd");
  const ExperimentConfig cfg = micro_config(dir);
  cmd_train(cfg, config_json(cfg));

  const UnlearnResult fast = cmd_unlearn(cfg, UnlearnMode::kFastFedul, false);
  CHECK(std::filesystem::exists(fast.model_path));
  const auto report = nlohmann::json::parse(std::ifstream(fast.report_path));
  CHECK(report.at("mode") == "fast_fedul");
  CHECK(report.at("wall_time_s").get<double>() >= 0.0);
  CHECK(!report.contains("delta"));

  const UnlearnResult naive = cmd_unlearn(cfg, UnlearnMode::kNaive, true);
  const auto naive_report = nlohmann::json::parse(std::ifstream(naive.report_path));
  CHECK(naive_report.at("mode") == "naive");
  CHECK(naive_report.contains("delta"));

  // reruns are byte-identical on the checkpoint
  std::ifstream m1(fast.model_path, std::ios::binary);
  const std::string bytes1((std::istreambuf_iterator<char>(m1)), {});
  cmd_unlearn(cfg, UnlearnMode::kFastFedul, false);
  std::ifstream m2(fast.model_path, std::ios::binary);
  const std::string bytes2((std::istreambuf_iterator<char>(m2)), {});
  CHECK(bytes1 == bytes2);
}

TEST_CASE("cmd_unlearn requires the train artifacts") {
  const ExperimentConfig cfg = micro_config(fresh_dir("fful_unlearn_missing"));
  CHECK_THROWS_AS(cmd_unlearn(cfg, UnlearnMode::kFastFedul, false), ConfigError);
}

TEST_CASE("cmd_evaluate and cmd_retrain complete against the stored run") {
  const std::string dir = fresh_dir("fful_eval_cmd");
  const ExperimentConfig cfg = micro_config(dir);
  cmd_train(cfg, config_json(cfg));

  const EvalReport eval = cmd_evaluate(cfg, dir + "/model.bin", dir + "/eval.json");
  CHECK(eval.main_acc >= 0.0);
  CHECK(eval.main_acc <= 1.0);
  CHECK(eval.backdoor_acc >= 0.0);
  CHECK(eval.backdoor_acc <= 1.0);
  CHECK(eval.stored_bytes > 0);

  const std::string retrained = cmd_retrain(cfg);
  CHECK(std::filesystem::exists(retrained));
  const MlpModel model = load_model(retrained);
  CHECK(model.spec.input_dim == 8);
}

TEST_CASE("cmd_bound reports a finite bound that covers the observation") {
  const std::string dir = fresh_dir("fful_bound_cmd");
  ExperimentConfig cfg = micro_config(dir);
  const BoundResult result = cmd_bound(cfg);
  CHECK(result.lipschitz_hat >= 0.0);
  CHECK(std::isfinite(result.bound));
  CHECK(std::isfinite(result.observed));
  CHECK(result.gamma_norms.size() == static_cast<std::size_t>(cfg.fed.rounds));
  CHECK(result.pairs_used > 0);
  const auto doc = nlohmann::json::parse(std::ifstream(result.report_path));
  CHECK(doc.contains("lipschitz_hat"));
  CHECK(doc.contains("bound"));
  CHECK(doc.contains("observed"));
}

TEST_CASE("cmd_bound with a single round is vacuous") {
  const std::string dir = fresh_dir("fful_bound_t1");
  nlohmann::json doc = config_json(micro_config(dir));
  doc["fed"]["rounds"] = 1;
  const BoundResult result = cmd_bound(parse_config(doc));
  CHECK(result.bound == 0.0);
  // only the f32 storage grid separates the unlearned and retrained models
  CHECK(result.observed < 1e-5);
}

TEST_CASE("cmd_compare emits the six-row table") {
  const std::string dir = fresh_dir("fful_compare_cmd");
  const ExperimentConfig cfg = micro_config(dir);
  const CompareResult result = cmd_compare(cfg);
  REQUIRE(result.rows.size() == 6);
  CHECK(result.rows[0].name == "pre-unlearned");
  CHECK(result.rows[1].name == "retrained");
  CHECK(result.rows[2].name == "fast_fedul");
  CHECK(result.rows[3].name == "naive");
  CHECK(result.rows[4].name == "partial_skew");
  CHECK(result.rows[5].name == "random_sample_ablation");
  CHECK(result.rows[2].deviation_mean_deg.has_value());
  CHECK(result.rows[3].deviation_mean_deg.has_value());

  std::ifstream csv(result.csv_path);
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 7);  // header + six rows
  CHECK(std::filesystem::exists(dir + "/deviation_fast_fedul.csv"));
  CHECK(std::filesystem::exists(dir + "/deviation_naive.csv"));
}
