#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fful/data.hpp"
#include "fful/model.hpp"
#include "fful/update_store.hpp"

namespace fful {

struct FedConfig {
  int num_clients = 0;   // N
  int sample_size = 0;   // m, expected sampled clients per round
  int rounds = 0;        // T
  int local_epochs = 1;  // R
  int batch_size = 32;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class AggregationMode { kPlain, kInverseProbability };
enum class SamplingMode { kByNorm, kUniform };

struct RunOptions {
  AggregationMode aggregation = AggregationMode::kPlain;
  SamplingMode sampling = SamplingMode::kByNorm;
  bool record_round_models = false;  // keep M_0..M_T in the trace
};

struct TrainingTrace {
  MlpModel final_model;
  UpdateStore store;
  std::vector<ParamVector> round_models;  // M_0..M_T when recorded, else empty
  std::vector<double> wall_times;         // seconds per round
  std::uint64_t stored_bytes = 0;
};

// Update after `epochs` passes of seeded minibatch SGD, minus the global
// parameters. The stream fixes the shuffle order.
ParamVector local_train(const MlpModel& global, const LabeledDataset& ds, int epochs,
                        int batch_size, double learning_rate, std::uint64_t stream);

// global + (1/divisor) * sum of updates, summed in the given order.
ParamVector fedavg_step(const ParamVector& global, std::span<const ParamVector* const> updates,
                        double divisor);
// global + (1/divisor) * sum of updates/p, for inverse-probability weighting.
ParamVector ipw_step(const ParamVector& global, std::span<const ParamVector* const> updates,
                     std::span<const double> probabilities, double divisor);

// Every client computes an update each round (the sampling plan needs all
// norms); only sampled updates are stored and aggregated with divisor 1/N.
// When a backdoor is given, that client's data is poisoned before training.
TrainingTrace run_training(const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec,
                           const std::optional<std::pair<int, BackdoorConfig>>& backdoor = {},
                           const RunOptions& options = {});

// Like run_training, but when round `request_round` is reached the target
// client is unlearned from the current global model (training-free) and
// excluded from all later rounds, which then aggregate over N-1 clients.
// request_round == rounds applies the unlearning after the final round.
TrainingTrace run_training_with_unlearn_hook(
    const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec, int target_client,
    double alpha, int request_round,
    const std::optional<std::pair<int, BackdoorConfig>>& backdoor = {},
    const RunOptions& options = {});

}  // namespace fful
