#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "fful/data.hpp"
#include "fful/evaluation.hpp"
#include "fful/federation.hpp"
#include "fful/unlearning.hpp"

namespace fful {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  enum class Kind { kBlobs, kIdx };
  Kind kind = Kind::kBlobs;
  // blobs
  int num_classes = 2;
  int samples_per_class = 400;
  int test_samples_per_class = 200;
  int input_dim = 8;
  double spread = 0.3;
  // idx
  std::string train_images, train_labels, test_images, test_labels;
  int subset = 0;       // 0 = all training samples
  int test_subset = 0;  // 0 = all test samples
};

struct BackdoorSettings {
  int client = -1;
  BackdoorConfig config;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<int> hidden_dims{16};
  FedConfig fed;
  double non_iid_ratio = 1.0;
  std::optional<BackdoorSettings> backdoor;
  UnlearnConfig unlearn;
  SamplingMode sampling = SamplingMode::kByNorm;
  AggregationMode aggregation = AggregationMode::kPlain;
  std::string output_dir = "out";
};

// The committed desk-scale scenario: 2-class blobs, N=10, m=5, T=30, R=2,
// eta=0.05, one malicious client with poison fraction 0.3, alpha=0.05.
nlohmann::json default_config_json();
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_json(const ExperimentConfig& cfg);

// Applies a dotted-path override, e.g. ("fed.rounds", "50"); the value is
// parsed as JSON when possible and kept as a string otherwise.
void set_config_value(nlohmann::json& doc, const std::string& dotted_key, const std::string& value);

struct Scenario {
  FederatedDataset fed;
  MlpSpec spec;
};

Scenario build_scenario(const ExperimentConfig& cfg);

struct TrainResult {
  TrainingTrace trace;
  double wall_time = 0.0;
  std::string model_path, store_path, manifest_path;
};

struct UnlearnResult {
  UnlearnReport report;
  UnlearnMode mode = UnlearnMode::kFastFedul;
  std::string model_path, report_path;
};

struct CompareRow {
  std::string name;
  double main_acc = 0.0;
  double backdoor_acc = 0.0;
  double wall_time = 0.0;
  std::uint64_t stored_bytes = 0;
  std::optional<double> deviation_mean_deg;  // vs the retrained model
};

struct CompareResult {
  std::vector<CompareRow> rows;
  std::string csv_path, json_path;
};

struct BoundResult {
  double lipschitz_hat = 0.0;
  double alpha = 0.0;
  std::vector<double> gamma_norms;
  double bound = 0.0;
  double observed = 0.0;
  int pairs_used = 0;
  std::string report_path;
};

// Subcommand bodies; `source_doc` is echoed verbatim into the run manifest.
TrainResult cmd_train(const ExperimentConfig& cfg, const nlohmann::json& source_doc);
UnlearnResult cmd_unlearn(const ExperimentConfig& cfg, UnlearnMode mode, bool include_delta);
EvalReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                        const std::string& report_path);
std::string cmd_retrain(const ExperimentConfig& cfg);  // returns the checkpoint path
BoundResult cmd_bound(const ExperimentConfig& cfg);
CompareResult cmd_compare(const ExperimentConfig& cfg);

}  // namespace fful
