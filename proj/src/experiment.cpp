#include "fful/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fful/rng.hpp"

namespace fful {
namespace {

using nlohmann::json;

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_json(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file for writing: " + path);
  out << doc.dump(2) << "\n";
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return json::parse(in);
}

LabeledDataset take_prefix(const LabeledDataset& ds, int count) {
  if (count <= 0 || static_cast<std::size_t>(count) >= ds.size()) return ds;
  LabeledDataset out = ds;
  out.labels.resize(count);
  out.features.resize(static_cast<std::size_t>(count) * ds.input_dim);
  return out;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

std::uint64_t file_size_or_zero(const std::string& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  return ec ? 0 : static_cast<std::uint64_t>(size);
}

}  // namespace

json default_config_json() {
  return json{
      {"dataset",
       {{"type", "blobs"},
        {"num_classes", 2},
        {"samples_per_class", 400},
        {"test_samples_per_class", 200},
        {"input_dim", 8},
        {"spread", 0.3}}},
      {"model", {{"hidden_dims", json::array({16})}}},
      {"fed",
       {{"num_clients", 10},
        {"sample_size", 5},
        {"rounds", 30},
        {"local_epochs", 2},
        {"batch_size", 20},
        {"learning_rate", 0.05},
        {"seed", 7}}},
      {"non_iid_ratio", 1.0},
      {"backdoor",
       {{"client", 9},
        {"trigger_pixels", json::array({json::array({0, 0}), json::array({0, 1}),
                                        json::array({0, 2}), json::array({0, 3})})},
        {"trigger_value", 1.0},
        {"target_label", 0},
        {"poison_fraction", 0.3}}},
      {"unlearn", {{"target_client", 9}, {"alpha", 0.05}, {"mode", "fast_fedul"}}},
      {"sampling", "by_norm"},
      {"aggregation", "plain"},
      {"output_dir", "out"},
  };
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  try {
    const json dataset = doc.value("dataset", json::object());
    const std::string kind = dataset.value("type", "blobs");
    if (kind == "blobs") {
      cfg.dataset.kind = DatasetConfig::Kind::kBlobs;
      cfg.dataset.num_classes = dataset.value("num_classes", cfg.dataset.num_classes);
      cfg.dataset.samples_per_class = dataset.value("samples_per_class", cfg.dataset.samples_per_class);
      cfg.dataset.test_samples_per_class =
          dataset.value("test_samples_per_class", cfg.dataset.test_samples_per_class);
      cfg.dataset.input_dim = dataset.value("input_dim", cfg.dataset.input_dim);
      cfg.dataset.spread = dataset.value("spread", cfg.dataset.spread);
    } else if (kind == "idx") {
      cfg.dataset.kind = DatasetConfig::Kind::kIdx;
      cfg.dataset.train_images = dataset.value("train_images", "");
      cfg.dataset.train_labels = dataset.value("train_labels", "");
      cfg.dataset.test_images = dataset.value("test_images", "");
      cfg.dataset.test_labels = dataset.value("test_labels", "");
      cfg.dataset.subset = dataset.value("subset", 0);
      cfg.dataset.test_subset = dataset.value("test_subset", 0);
    } else {
      throw ConfigError("unknown dataset type: " + kind);
    }

    const json model = doc.value("model", json::object());
    if (model.contains("hidden_dims")) {
      cfg.hidden_dims = model.at("hidden_dims").get<std::vector<int>>();
    }

    const json fed = doc.value("fed", json::object());
    cfg.fed.num_clients = fed.value("num_clients", 10);
    cfg.fed.sample_size = fed.value("sample_size", 5);
    cfg.fed.rounds = fed.value("rounds", 30);
    cfg.fed.local_epochs = fed.value("local_epochs", 2);
    cfg.fed.batch_size = fed.value("batch_size", 20);
    cfg.fed.learning_rate = fed.value("learning_rate", 0.05);
    cfg.fed.seed = fed.value("seed", std::uint64_t{7});

    cfg.non_iid_ratio = doc.value("non_iid_ratio", 1.0);

    if (doc.contains("backdoor") && !doc.at("backdoor").is_null()) {
      const json bd = doc.at("backdoor");
      BackdoorSettings settings;
      settings.client = bd.value("client", -1);
      for (const auto& px : bd.value("trigger_pixels", json::array())) {
        settings.config.trigger_pixels.emplace_back(px.at(0).get<int>(), px.at(1).get<int>());
      }
      settings.config.trigger_value = bd.value("trigger_value", 1.0);
      settings.config.target_label = bd.value("target_label", 0);
      settings.config.poison_fraction = bd.value("poison_fraction", 0.3);
      cfg.backdoor = std::move(settings);
    }

    const json unlearn = doc.value("unlearn", json::object());
    cfg.unlearn.target_client = unlearn.value("target_client", cfg.fed.num_clients - 1);
    cfg.unlearn.alpha = unlearn.value("alpha", 0.05);
    cfg.unlearn.mode = unlearn_mode_from_string(unlearn.value("mode", "fast_fedul"));

    const std::string sampling = doc.value("sampling", "by_norm");
    if (sampling == "by_norm") {
      cfg.sampling = SamplingMode::kByNorm;
    } else if (sampling == "uniform") {
      cfg.sampling = SamplingMode::kUniform;
    } else {
      throw ConfigError("unknown sampling mode: " + sampling);
    }

    const std::string aggregation = doc.value("aggregation", "plain");
    if (aggregation == "plain") {
      cfg.aggregation = AggregationMode::kPlain;
    } else if (aggregation == "ipw") {
      cfg.aggregation = AggregationMode::kInverseProbability;
    } else {
      throw ConfigError("unknown aggregation mode: " + aggregation);
    }

    cfg.output_dir = doc.value("output_dir", "out");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

json config_json(const ExperimentConfig& cfg) {
  json dataset;
  if (cfg.dataset.kind == DatasetConfig::Kind::kBlobs) {
    dataset = {{"type", "blobs"},
               {"num_classes", cfg.dataset.num_classes},
               {"samples_per_class", cfg.dataset.samples_per_class},
               {"test_samples_per_class", cfg.dataset.test_samples_per_class},
               {"input_dim", cfg.dataset.input_dim},
               {"spread", cfg.dataset.spread}};
  } else {
    dataset = {{"type", "idx"},
               {"train_images", cfg.dataset.train_images},
               {"train_labels", cfg.dataset.train_labels},
               {"test_images", cfg.dataset.test_images},
               {"test_labels", cfg.dataset.test_labels},
               {"subset", cfg.dataset.subset},
               {"test_subset", cfg.dataset.test_subset}};
  }
  json doc{
      {"dataset", dataset},
      {"model", {{"hidden_dims", cfg.hidden_dims}}},
      {"fed",
       {{"num_clients", cfg.fed.num_clients},
        {"sample_size", cfg.fed.sample_size},
        {"rounds", cfg.fed.rounds},
        {"local_epochs", cfg.fed.local_epochs},
        {"batch_size", cfg.fed.batch_size},
        {"learning_rate", cfg.fed.learning_rate},
        {"seed", cfg.fed.seed}}},
      {"non_iid_ratio", cfg.non_iid_ratio},
      {"unlearn",
       {{"target_client", cfg.unlearn.target_client},
        {"alpha", cfg.unlearn.alpha},
        {"mode", to_string(cfg.unlearn.mode)}}},
      {"sampling", cfg.sampling == SamplingMode::kByNorm ? "by_norm" : "uniform"},
      {"aggregation", cfg.aggregation == AggregationMode::kPlain ? "plain" : "ipw"},
      {"output_dir", cfg.output_dir},
  };
  if (cfg.backdoor.has_value()) {
    json pixels = json::array();
    for (const auto& [r, c] : cfg.backdoor->config.trigger_pixels) {
      pixels.push_back(json::array({r, c}));
    }
    doc["backdoor"] = {{"client", cfg.backdoor->client},
                       {"trigger_pixels", pixels},
                       {"trigger_value", cfg.backdoor->config.trigger_value},
                       {"target_label", cfg.backdoor->config.target_label},
                       {"poison_fraction", cfg.backdoor->config.poison_fraction}};
  } else {
    doc["backdoor"] = nullptr;
  }
  return doc;
}

void set_config_value(json& doc, const std::string& dotted_key, const std::string& value) {
  json* node = &doc;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', begin);
    const std::string part = dotted_key.substr(begin, dot - begin);
    if (part.empty()) throw ConfigError("bad override key: " + dotted_key);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;  // plain string
      }
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    begin = dot + 1;
  }
}

Scenario build_scenario(const ExperimentConfig& cfg) {
  cfg.fed.validate();

  LabeledDataset train, test;
  if (cfg.dataset.kind == DatasetConfig::Kind::kBlobs) {
    train = make_blobs(cfg.dataset.num_classes, cfg.dataset.samples_per_class,
                       cfg.dataset.input_dim, cfg.dataset.spread,
                       stream_key(cfg.fed.seed, StreamPurpose::kBlobs, 1));
    test = make_blobs(cfg.dataset.num_classes, cfg.dataset.test_samples_per_class,
                      cfg.dataset.input_dim, cfg.dataset.spread,
                      stream_key(cfg.fed.seed, StreamPurpose::kBlobs, 2));
  } else {
    require_file(cfg.dataset.train_images, "IDX train image file");
    require_file(cfg.dataset.train_labels, "IDX train label file");
    require_file(cfg.dataset.test_images, "IDX test image file");
    require_file(cfg.dataset.test_labels, "IDX test label file");
    train = take_prefix(load_idx(cfg.dataset.train_images, cfg.dataset.train_labels),
                        cfg.dataset.subset);
    test = take_prefix(load_idx(cfg.dataset.test_images, cfg.dataset.test_labels),
                       cfg.dataset.test_subset);
    const int classes = std::max(train.num_classes, test.num_classes);
    train.num_classes = classes;
    test.num_classes = classes;
  }

  Scenario scenario;
  scenario.spec.input_dim = train.input_dim;
  scenario.spec.hidden_dims = cfg.hidden_dims;
  scenario.spec.num_classes = train.num_classes;
  scenario.spec.validate();

  scenario.fed.clients = partition_dirichlet(train, cfg.fed.num_clients, cfg.non_iid_ratio,
                                             stream_key(cfg.fed.seed, StreamPurpose::kPartition));
  scenario.fed.test_main = std::move(test);
  if (cfg.backdoor.has_value()) {
    if (cfg.backdoor->client < 0 || cfg.backdoor->client >= cfg.fed.num_clients) {
      throw ConfigError("backdoor client id out of range");
    }
    scenario.fed.test_backdoor =
        make_backdoor_testset(scenario.fed.test_main, cfg.backdoor->config);
  }
  if (cfg.unlearn.target_client < 0 || cfg.unlearn.target_client >= cfg.fed.num_clients) {
    throw ConfigError("unlearn target client id out of range");
  }
  return scenario;
}

namespace {

std::optional<std::pair<int, BackdoorConfig>> backdoor_arg(const ExperimentConfig& cfg) {
  if (!cfg.backdoor.has_value()) return std::nullopt;
  return std::make_pair(cfg.backdoor->client, cfg.backdoor->config);
}

RunOptions run_options(const ExperimentConfig& cfg, bool record_round_models = false) {
  RunOptions options;
  options.aggregation = cfg.aggregation;
  options.sampling = cfg.sampling;
  options.record_round_models = record_round_models;
  return options;
}

json unlearn_report_json(const UnlearnResult& result, double alpha, bool include_delta) {
  json doc{
      {"mode", to_string(result.mode)},
      {"alpha", alpha},
      {"wall_time_s", result.report.wall_time},
      {"delta_norm", vec_norm(result.report.delta)},
      {"gamma_norms", result.report.gamma_norms},
      {"model_path", result.model_path},
  };
  if (result.report.bound.has_value()) doc["bound"] = *result.report.bound;
  if (include_delta) doc["delta"] = result.report.delta.values();
  return doc;
}

void write_deviation_csv(const DeviationSummary& summary, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file for writing: " + path);
  out << "bin_start_deg,count\n";
  for (int b = 0; b < kDeviationBins; ++b) {
    out << b * kDeviationBinDegrees << "," << summary.histogram[b] << "\n";
  }
}

}  // namespace

TrainResult cmd_train(const ExperimentConfig& cfg, const json& source_doc) {
  Scenario scenario = build_scenario(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.trace = run_training(cfg.fed, scenario.fed, scenario.spec, backdoor_arg(cfg),
                              run_options(cfg));
  result.wall_time = seconds_since(start);

  result.model_path = join_path(cfg.output_dir, "model.bin");
  result.store_path = join_path(cfg.output_dir, "store.bin");
  result.manifest_path = join_path(cfg.output_dir, "run_manifest.json");
  save_model(result.trace.final_model, result.model_path);
  store_write(result.trace.store, result.store_path, scenario.spec.layout_description());

  json manifest{
      {"config", source_doc},
      {"config_effective", config_json(cfg)},
      {"stored_bytes", result.trace.stored_bytes},
      {"round_wall_times_s", result.trace.wall_times},
      {"total_wall_time_s", result.wall_time},
      {"parameter_layout", scenario.spec.layout_description()},
      {"timestamp", timestamp_utc()},
  };
  write_json(manifest, result.manifest_path);
  return result;
}

UnlearnResult cmd_unlearn(const ExperimentConfig& cfg, UnlearnMode mode, bool include_delta) {
  const std::string model_path = join_path(cfg.output_dir, "model.bin");
  const std::string store_path = join_path(cfg.output_dir, "store.bin");
  require_file(model_path, "model checkpoint");
  require_file(store_path, "update store");

  const MlpModel model = load_model(model_path);
  const UpdateStore store = store_read(store_path);

  UnlearnResult result;
  result.mode = mode;
  UnlearnConfig ucfg = cfg.unlearn;
  ucfg.mode = mode;
  if (mode == UnlearnMode::kNaive) {
    const auto start = std::chrono::steady_clock::now();
    result.report.unlearned_model = naive_unlearn(model, store, ucfg.target_client);
    result.report.wall_time = seconds_since(start);
    result.report.delta = vec_sub(result.report.unlearned_model.params, model.params);
  } else {
    result.report = fast_fedul(model, store, ucfg);
  }

  result.model_path = join_path(cfg.output_dir, "unlearned_" + to_string(mode) + ".bin");
  result.report_path = join_path(cfg.output_dir, "unlearn_" + to_string(mode) + ".json");
  save_model(result.report.unlearned_model, result.model_path);
  write_json(unlearn_report_json(result, ucfg.alpha, include_delta), result.report_path);
  return result;
}

EvalReport cmd_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                        const std::string& report_path) {
  require_file(model_path, "model checkpoint");
  const MlpModel model = load_model(model_path);
  Scenario scenario = build_scenario(cfg);

  const auto start = std::chrono::steady_clock::now();
  EvalReport report;
  const auto [main_acc, backdoor_acc] = evaluate(model, scenario.fed);
  report.main_acc = main_acc;
  report.backdoor_acc = backdoor_acc;
  report.wall_times["evaluate"] = seconds_since(start);
  report.stored_bytes = file_size_or_zero(join_path(cfg.output_dir, "store.bin"));

  json doc{
      {"model_path", model_path},
      {"main_acc", report.main_acc},
      {"backdoor_acc", report.backdoor_acc},
      {"wall_times_s", report.wall_times},
      {"stored_bytes", report.stored_bytes},
  };
  write_json(doc, report_path);
  return report;
}

std::string cmd_retrain(const ExperimentConfig& cfg) {
  const std::string store_path = join_path(cfg.output_dir, "store.bin");
  require_file(store_path, "update store");
  const UpdateStore store = store_read(store_path);
  Scenario scenario = build_scenario(cfg);

  const auto start = std::chrono::steady_clock::now();
  const MlpModel retrained =
      retrain_oracle(cfg.fed, scenario.fed, scenario.spec, store, cfg.unlearn.target_client);
  const double wall = seconds_since(start);

  const std::string model_path = join_path(cfg.output_dir, "retrained.bin");
  save_model(retrained, model_path);
  write_json(json{{"wall_time_s", wall}, {"target_client", cfg.unlearn.target_client}},
             join_path(cfg.output_dir, "retrain.json"));
  return model_path;
}

BoundResult cmd_bound(const ExperimentConfig& cfg) {
  Scenario scenario = build_scenario(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  TrainingTrace trace = run_training(cfg.fed, scenario.fed, scenario.spec, backdoor_arg(cfg),
                                     run_options(cfg, /*record_round_models=*/true));
  RetrainTrace retrain = retrain_with_trace(cfg.fed, scenario.fed, scenario.spec, trace.store,
                                            cfg.unlearn.target_client, &trace.round_models);

  BoundResult result;
  result.alpha = cfg.unlearn.alpha;
  for (const SkewPair& pair : retrain.skew_pairs) {
    if (vec_norm(pair.delta) > 0.0) ++result.pairs_used;
  }
  result.lipschitz_hat =
      result.pairs_used > 0 ? estimate_lipschitz(retrain.skew_pairs) : 0.0;

  UnlearnConfig ucfg = cfg.unlearn;
  ucfg.mode = UnlearnMode::kFastFedul;
  const UnlearnReport report = fast_fedul(trace.final_model, trace.store, ucfg);

  BoundInputs inputs;
  inputs.lipschitz = result.lipschitz_hat;
  inputs.alpha = cfg.unlearn.alpha;
  inputs.gamma_norms = report.gamma_norms;
  inputs.rounds = cfg.fed.rounds;
  result.bound = theorem1_bound(inputs);
  result.gamma_norms = report.gamma_norms;
  result.observed =
      vec_norm(vec_sub(report.unlearned_model.params, retrain.final_model.params));

  result.report_path = join_path(cfg.output_dir, "bound.json");
  write_json(json{{"lipschitz_hat", result.lipschitz_hat},
                  {"alpha", result.alpha},
                  {"gamma_norms", result.gamma_norms},
                  {"bound", result.bound},
                  {"observed", result.observed},
                  {"satisfied", result.observed <= result.bound},
                  {"pairs_used", result.pairs_used},
                  {"wall_times_s",
                   {{"retrain", retrain.wall_time}, {"unlearn", report.wall_time}}}},
             result.report_path);
  return result;
}

CompareResult cmd_compare(const ExperimentConfig& cfg) {
  Scenario scenario = build_scenario(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  auto timed_train = [&](SamplingMode sampling, double& wall) {
    RunOptions options = run_options(cfg);
    options.sampling = sampling;
    const auto start = std::chrono::steady_clock::now();
    TrainingTrace trace =
        run_training(cfg.fed, scenario.fed, scenario.spec, backdoor_arg(cfg), options);
    wall = seconds_since(start);
    return trace;
  };

  double train_wall = 0.0;
  TrainingTrace trace = timed_train(cfg.sampling, train_wall);

  const auto retrain_start = std::chrono::steady_clock::now();
  const MlpModel retrained =
      retrain_oracle(cfg.fed, scenario.fed, scenario.spec, trace.store, cfg.unlearn.target_client);
  const double retrain_wall = seconds_since(retrain_start);

  UnlearnConfig ucfg = cfg.unlearn;
  ucfg.mode = UnlearnMode::kFastFedul;
  const UnlearnReport fast = fast_fedul(trace.final_model, trace.store, ucfg);

  const auto naive_start = std::chrono::steady_clock::now();
  const MlpModel naive = naive_unlearn(trace.final_model, trace.store, cfg.unlearn.target_client);
  const double naive_wall = seconds_since(naive_start);

  UnlearnConfig partial_cfg = ucfg;
  partial_cfg.mode = UnlearnMode::kPartialSkew;
  const auto partial_start = std::chrono::steady_clock::now();
  const MlpModel partial = ablation_partial_skew(trace.final_model, trace.store, partial_cfg);
  const double partial_wall = seconds_since(partial_start);

  // The random-sampling ablation retrains with uniform selection and then
  // applies the same unlearning arithmetic to that store.
  double uniform_wall = 0.0;
  TrainingTrace uniform_trace = timed_train(SamplingMode::kUniform, uniform_wall);
  UnlearnConfig ablation_cfg = ucfg;
  ablation_cfg.mode = UnlearnMode::kRandomSampleAblation;
  const UnlearnReport ablation =
      fast_fedul(uniform_trace.final_model, uniform_trace.store, ablation_cfg);

  const DeviationSummary fast_dev = deviation_histogram(fast.unlearned_model, retrained);
  const DeviationSummary naive_dev = deviation_histogram(naive, retrained);

  auto eval_row = [&](const std::string& name, const MlpModel& model, double wall,
                      std::uint64_t bytes, std::optional<double> deviation) {
    const auto [main_acc, backdoor_acc] = evaluate(model, scenario.fed);
    return CompareRow{name, main_acc, backdoor_acc, wall, bytes, deviation};
  };

  CompareResult result;
  result.rows.push_back(eval_row("pre-unlearned", trace.final_model, train_wall,
                                 trace.stored_bytes, std::nullopt));
  result.rows.push_back(
      eval_row("retrained", retrained, retrain_wall, trace.stored_bytes, std::nullopt));
  result.rows.push_back(eval_row("fast_fedul", fast.unlearned_model, fast.wall_time,
                                 trace.stored_bytes, fast_dev.mean_deg));
  result.rows.push_back(
      eval_row("naive", naive, naive_wall, trace.stored_bytes, naive_dev.mean_deg));
  result.rows.push_back(
      eval_row("partial_skew", partial, partial_wall, trace.stored_bytes, std::nullopt));
  result.rows.push_back(eval_row("random_sample_ablation", ablation.unlearned_model,
                                 ablation.wall_time + uniform_wall, uniform_trace.stored_bytes,
                                 std::nullopt));

  result.csv_path = join_path(cfg.output_dir, "compare.csv");
  result.json_path = join_path(cfg.output_dir, "compare.json");

  std::ofstream csv(result.csv_path, std::ios::trunc);
  if (!csv) throw ConfigError("cannot open output file for writing: " + result.csv_path);
  csv << "method,main_acc,backdoor_acc,wall_time_s,stored_bytes,deviation_mean_deg\n";
  csv << std::setprecision(10);
  for (const CompareRow& row : result.rows) {
    csv << row.name << "," << row.main_acc << "," << row.backdoor_acc << "," << row.wall_time
        << "," << row.stored_bytes << ",";
    if (row.deviation_mean_deg.has_value()) csv << *row.deviation_mean_deg;
    csv << "\n";
  }
  csv.close();

  json rows = json::array();
  for (const CompareRow& row : result.rows) {
    json entry{{"method", row.name},
               {"main_acc", row.main_acc},
               {"backdoor_acc", row.backdoor_acc},
               {"wall_time_s", row.wall_time},
               {"stored_bytes", row.stored_bytes}};
    if (row.deviation_mean_deg.has_value()) entry["deviation_mean_deg"] = *row.deviation_mean_deg;
    rows.push_back(entry);
  }
  write_json(json{{"rows", rows}}, result.json_path);

  write_deviation_csv(fast_dev, join_path(cfg.output_dir, "deviation_fast_fedul.csv"));
  write_deviation_csv(naive_dev, join_path(cfg.output_dir, "deviation_naive.csv"));
  return result;
}

}  // namespace fful
