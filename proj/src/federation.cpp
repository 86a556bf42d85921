#include "fful/federation.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

#include "fful/parallel.hpp"
#include "fful/rng.hpp"
#include "fful/sampling.hpp"
#include "fful/unlearning.hpp"

namespace fful {
namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void FedConfig::validate() const {
  if (num_clients < 2) throw std::invalid_argument("FedConfig: need at least 2 clients");
  if (sample_size < 1 || sample_size > num_clients) {
    throw std::invalid_argument("FedConfig: sample_size must be in [1, num_clients]");
  }
  if (rounds < 1) throw std::invalid_argument("FedConfig: rounds must be >= 1");
  if (local_epochs < 1) throw std::invalid_argument("FedConfig: local_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("FedConfig: batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("FedConfig: learning_rate must be >= 0");
}

ParamVector local_train(const MlpModel& global, const LabeledDataset& ds, int epochs,
                        int batch_size, double learning_rate, std::uint64_t stream) {
  if (ds.size() == 0) throw std::invalid_argument("local_train: empty dataset");
  MlpModel model = global;
  Rng rng(stream);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_below(i)]);
    }
    for (std::size_t lo = 0; lo < order.size(); lo += batch_size) {
      const std::size_t hi = std::min(order.size(), lo + batch_size);
      const auto lg = loss_and_grad(model, ds, std::span(order).subspan(lo, hi - lo));
      vec_axpy_inplace(model.params, -learning_rate, lg.grad);
    }
  }
  return vec_sub(model.params, global.params);
}

ParamVector fedavg_step(const ParamVector& global, std::span<const ParamVector* const> updates,
                        double divisor) {
  ParamVector sum(global.dim());
  for (const ParamVector* u : updates) vec_add_inplace(sum, *u);
  ParamVector next = global;
  vec_axpy_inplace(next, 1.0 / divisor, sum);
  return next;
}

ParamVector ipw_step(const ParamVector& global, std::span<const ParamVector* const> updates,
                     std::span<const double> probabilities, double divisor) {
  ParamVector sum(global.dim());
  for (std::size_t j = 0; j < updates.size(); ++j) {
    if (!(probabilities[j] > 0.0)) throw std::invalid_argument("ipw_step: probability must be positive");
    vec_axpy_inplace(sum, 1.0 / probabilities[j], *updates[j]);
  }
  ParamVector next = global;
  vec_axpy_inplace(next, 1.0 / divisor, sum);
  return next;
}

namespace {

TrainingTrace run_impl(const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec,
                       const std::optional<std::pair<int, BackdoorConfig>>& backdoor,
                       const RunOptions& options, const int* unlearn_target,
                       double unlearn_alpha, int request_round) {
  cfg.validate();
  spec.validate();
  if (static_cast<int>(fed.clients.size()) != cfg.num_clients) {
    throw std::invalid_argument("run_training: dataset has " + std::to_string(fed.clients.size()) +
                                " clients, config expects " + std::to_string(cfg.num_clients));
  }
  if (unlearn_target != nullptr) {
    if (*unlearn_target < 0 || *unlearn_target >= cfg.num_clients) {
      throw std::invalid_argument("unlearn hook: target client out of range");
    }
    if (request_round < 0 || request_round > cfg.rounds) {
      throw std::invalid_argument("unlearn hook: request round must be in [0, rounds]");
    }
  }

  const int n_clients = cfg.num_clients;
  std::vector<const LabeledDataset*> data(n_clients);
  for (int i = 0; i < n_clients; ++i) data[i] = &fed.clients[i];
  LabeledDataset poisoned;
  if (backdoor.has_value()) {
    const auto& [client, bd_cfg] = *backdoor;
    if (client < 0 || client >= n_clients) {
      throw std::invalid_argument("run_training: backdoor client out of range");
    }
    poisoned = poison_client(fed.clients[client], bd_cfg,
                             stream_key(cfg.seed, StreamPurpose::kPoison, client));
    data[client] = &poisoned;
  }

  MlpModel global = init_model(spec, cfg.seed);
  const std::uint32_t dim = static_cast<std::uint32_t>(global.params.dim());

  TrainingTrace trace;
  trace.store.num_clients = static_cast<std::uint32_t>(n_clients);
  trace.store.dim = dim;
  trace.wall_times.reserve(cfg.rounds);
  if (options.record_round_models) trace.round_models.push_back(global.params);

  std::vector<int> active(n_clients);
  std::iota(active.begin(), active.end(), 0);
  bool unlearned = false;

  auto apply_unlearn = [&]() {
    UnlearnConfig ucfg{*unlearn_target, unlearn_alpha, UnlearnMode::kFastFedul};
    global = fast_fedul(global, trace.store, ucfg).unlearned_model;
    active.erase(std::remove(active.begin(), active.end(), *unlearn_target), active.end());
    unlearned = true;
  };

  for (int round = 0; round < cfg.rounds; ++round) {
    const auto start = std::chrono::steady_clock::now();
    if (unlearn_target != nullptr && !unlearned && request_round == round) apply_unlearn();

    std::vector<ParamVector> updates(active.size());
    parallel_for(active.size(), [&](std::size_t slot) {
      const int client = active[slot];
      updates[slot] = local_train(global, *data[client], cfg.local_epochs, cfg.batch_size,
                                  cfg.learning_rate,
                                  stream_key(cfg.seed, StreamPurpose::kLocalTrain,
                                             static_cast<std::uint64_t>(round),
                                             static_cast<std::uint64_t>(client)));
    });

    std::vector<double> norms(active.size());
    for (std::size_t slot = 0; slot < active.size(); ++slot) norms[slot] = vec_norm(updates[slot]);

    const int m_eff = std::min<int>(cfg.sample_size, static_cast<int>(active.size()));
    const SamplingPlan plan = options.sampling == SamplingMode::kByNorm
                                  ? compute_probabilities(norms, m_eff)
                                  : uniform_plan(static_cast<int>(active.size()), m_eff);
    const std::vector<int> sampled =
        draw_sample(plan, stream_key(cfg.seed, StreamPurpose::kSampling,
                                     static_cast<std::uint64_t>(round)));

    std::vector<StoredUpdate> entries;
    entries.reserve(sampled.size());
    std::vector<const ParamVector*> sampled_updates;
    std::vector<double> sampled_probs;
    for (int slot : sampled) {
      entries.push_back(StoredUpdate{static_cast<std::uint32_t>(active[slot]),
                                     plan.probabilities[slot], updates[slot]});
      sampled_updates.push_back(&updates[slot]);
      sampled_probs.push_back(plan.probabilities[slot]);
    }
    store_append(trace.store, static_cast<std::uint32_t>(round), std::move(entries));

    const double divisor = unlearned ? static_cast<double>(n_clients - 1)
                                     : static_cast<double>(n_clients);
    global.params = options.aggregation == AggregationMode::kPlain
                        ? fedavg_step(global.params, sampled_updates, divisor)
                        : ipw_step(global.params, sampled_updates, sampled_probs, divisor);

    if (options.record_round_models) trace.round_models.push_back(global.params);
    trace.wall_times.push_back(seconds_since(start));
  }
  if (unlearn_target != nullptr && !unlearned && request_round == cfg.rounds) apply_unlearn();

  trace.final_model = std::move(global);
  trace.stored_bytes = trace.store.serialized_bytes();
  return trace;
}

}  // namespace

TrainingTrace run_training(const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec,
                           const std::optional<std::pair<int, BackdoorConfig>>& backdoor,
                           const RunOptions& options) {
  return run_impl(cfg, fed, spec, backdoor, options, nullptr, 0.0, 0);
}

TrainingTrace run_training_with_unlearn_hook(
    const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec, int target_client,
    double alpha, int request_round, const std::optional<std::pair<int, BackdoorConfig>>& backdoor,
    const RunOptions& options) {
  return run_impl(cfg, fed, spec, backdoor, options, &target_client, alpha, request_round);
}

}  // namespace fful
