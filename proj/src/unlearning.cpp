#include "fful/unlearning.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "fful/parallel.hpp"
#include "fful/rng.hpp"

namespace fful {
namespace {

double seconds_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void check_store_against_model(const MlpModel& model, const UpdateStore& store) {
  if (store.dim != model.params.dim()) {
    throw std::invalid_argument("store dimension " + std::to_string(store.dim) +
                                " does not match model dimension " +
                                std::to_string(model.params.dim()));
  }
}

void check_target(const UpdateStore& store, int target_client) {
  if (target_client < 0 || static_cast<std::uint32_t>(target_client) >= store.num_clients) {
    throw std::invalid_argument("target client out of range");
  }
  if (store.num_clients < 2) throw std::invalid_argument("unlearning needs at least 2 clients");
}

}  // namespace

std::string to_string(UnlearnMode mode) {
  switch (mode) {
    case UnlearnMode::kFastFedul: return "fast_fedul";
    case UnlearnMode::kNaive: return "naive";
    case UnlearnMode::kPartialSkew: return "partial_skew";
    case UnlearnMode::kRandomSampleAblation: return "random_sample_ablation";
  }
  throw std::invalid_argument("unknown unlearn mode");
}

UnlearnMode unlearn_mode_from_string(const std::string& name) {
  if (name == "fast_fedul") return UnlearnMode::kFastFedul;
  if (name == "naive") return UnlearnMode::kNaive;
  if (name == "partial_skew") return UnlearnMode::kPartialSkew;
  if (name == "random_sample_ablation") return UnlearnMode::kRandomSampleAblation;
  throw std::invalid_argument("unknown unlearn mode: " + name);
}

RecursionResult unlearn_recursion(const UpdateStore& store, int target_client, double alpha,
                                  UnlearnMode mode) {
  check_target(store, target_client);
  const double n = static_cast<double>(store.num_clients);
  const double cross_scale = 1.0 / (n * (n - 1.0));
  const double target_scale = -1.0 / n;
  const int total_rounds = static_cast<int>(store.rounds());

  const std::size_t dim = store.dim;
  RecursionResult result;
  result.delta = ParamVector(dim);
  result.gamma_norms.reserve(total_rounds);

  // Sequential fold over rounds; the per-round vectors are small enough that
  // plain loops beat any threading here.
  double* delta = result.delta.data();
  std::vector<double> benign_sum(dim), gamma(dim);
  for (int t = 0; t < total_rounds; ++t) {
    const RoundRecord& rec = store.records[t];
    std::fill(benign_sum.begin(), benign_sum.end(), 0.0);
    const ParamVector* target_update = nullptr;
    for (const StoredUpdate& e : rec.entries) {
      if (static_cast<int>(e.client_id) == target_client) {
        target_update = &e.update;
      } else {
        const double* u = e.update.data();
        for (std::size_t d = 0; d < dim; ++d) benign_sum[d] += u[d];
      }
    }
    for (std::size_t d = 0; d < dim; ++d) gamma[d] = benign_sum[d] * cross_scale;
    if (target_update != nullptr) {
      const double* u = target_update->data();
      for (std::size_t d = 0; d < dim; ++d) gamma[d] += target_scale * u[d];
    }
    double norm_sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) norm_sq += gamma[d] * gamma[d];
    result.gamma_norms.push_back(std::sqrt(norm_sq));

    double factor = 1.0 + alpha;
    if (mode == UnlearnMode::kPartialSkew && 2 * (t + 1) > total_rounds) factor = 1.0;
    for (std::size_t d = 0; d < dim; ++d) delta[d] = factor * delta[d] + gamma[d];
  }
  result.delta.check_finite("unlearn_recursion");
  return result;
}

UnlearnReport fast_fedul(const MlpModel& final_model, const UpdateStore& store,
                         const UnlearnConfig& cfg) {
  check_store_against_model(final_model, store);
  if (cfg.mode == UnlearnMode::kNaive) {
    throw std::invalid_argument("fast_fedul: naive mode is served by naive_unlearn");
  }
  const auto start = std::chrono::steady_clock::now();
  RecursionResult rec = unlearn_recursion(store, cfg.target_client, cfg.alpha, cfg.mode);

  UnlearnReport report;
  report.unlearned_model = final_model;
  report.unlearned_model.params = vec_add(final_model.params, rec.delta);
  report.delta = std::move(rec.delta);
  report.gamma_norms = std::move(rec.gamma_norms);
  report.wall_time = seconds_since(start);
  return report;
}

MlpModel naive_unlearn(const MlpModel& final_model, const UpdateStore& store, int target_client) {
  check_store_against_model(final_model, store);
  check_target(store, target_client);
  const double scale = -1.0 / static_cast<double>(store.num_clients);
  MlpModel model = final_model;
  for (const RoundRecord& rec : store.records) {
    for (const StoredUpdate& e : rec.entries) {
      if (static_cast<int>(e.client_id) == target_client) {
        vec_axpy_inplace(model.params, scale, e.update);
      }
    }
  }
  return model;
}

MlpModel ablation_partial_skew(const MlpModel& final_model, const UpdateStore& store,
                               const UnlearnConfig& cfg) {
  UnlearnConfig partial = cfg;
  partial.mode = UnlearnMode::kPartialSkew;
  return fast_fedul(final_model, store, partial).unlearned_model;
}

RetrainTrace retrain_with_trace(const FedConfig& cfg, const FederatedDataset& fed,
                                const MlpSpec& spec, const UpdateStore& store, int target_client,
                                const std::vector<ParamVector>* original_round_models) {
  cfg.validate();
  spec.validate();
  check_target(store, target_client);
  if (store.num_clients != static_cast<std::uint32_t>(cfg.num_clients)) {
    throw std::invalid_argument("retrain: store client count does not match config");
  }
  if (store.dim != static_cast<std::uint32_t>(spec.param_count())) {
    throw std::invalid_argument("retrain: store dimension does not match model spec");
  }
  if (static_cast<int>(fed.clients.size()) != cfg.num_clients) {
    throw std::invalid_argument("retrain: dataset client count does not match config");
  }
  if (original_round_models != nullptr &&
      original_round_models->size() != store.rounds() + std::size_t{1}) {
    throw std::invalid_argument("retrain: need one original model per round plus the initial one");
  }

  const auto start = std::chrono::steady_clock::now();
  const double divisor = static_cast<double>(cfg.num_clients - 1);
  MlpModel model = init_model(spec, cfg.seed);

  RetrainTrace trace;
  for (std::uint32_t round = 0; round < store.rounds(); ++round) {
    std::vector<int> participants;
    for (const StoredUpdate& e : store.records[round].entries) {
      if (static_cast<int>(e.client_id) != target_client) {
        participants.push_back(static_cast<int>(e.client_id));
      }
    }

    std::vector<ParamVector> updates(participants.size());
    parallel_for(participants.size(), [&](std::size_t slot) {
      const int client = participants[slot];
      updates[slot] = local_train(model, fed.clients[client], cfg.local_epochs, cfg.batch_size,
                                  cfg.learning_rate,
                                  stream_key(cfg.seed, StreamPurpose::kLocalTrain, round,
                                             static_cast<std::uint64_t>(client)));
    });

    if (original_round_models != nullptr) {
      const ParamVector& original = (*original_round_models)[round];
      MlpModel original_model{spec, original};
      std::vector<ParamVector> original_updates(participants.size());
      parallel_for(participants.size(), [&](std::size_t slot) {
        const int client = participants[slot];
        original_updates[slot] =
            local_train(original_model, fed.clients[client], cfg.local_epochs, cfg.batch_size,
                        cfg.learning_rate,
                        stream_key(cfg.seed, StreamPurpose::kLocalTrain, round,
                                   static_cast<std::uint64_t>(client)));
      });
      SkewPair pair;
      pair.delta = vec_sub(model.params, original);
      pair.epsilon = ParamVector(store.dim);
      for (std::size_t slot = 0; slot < participants.size(); ++slot) {
        ParamVector diff = vec_sub(updates[slot], original_updates[slot]);
        vec_add_inplace(pair.epsilon, diff);
      }
      pair.epsilon = vec_scale(pair.epsilon, 1.0 / divisor);
      trace.skew_pairs.push_back(std::move(pair));
    }

    std::vector<const ParamVector*> update_ptrs;
    update_ptrs.reserve(updates.size());
    for (const ParamVector& u : updates) update_ptrs.push_back(&u);
    model.params = fedavg_step(model.params, update_ptrs, divisor);
  }

  trace.final_model = std::move(model);
  trace.wall_time = seconds_since(start);
  return trace;
}

MlpModel retrain_oracle(const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec,
                        const UpdateStore& store, int target_client) {
  return retrain_with_trace(cfg, fed, spec, store, target_client, nullptr).final_model;
}

double estimate_lipschitz(std::span<const SkewPair> pairs) {
  double best = -1.0;
  for (const SkewPair& pair : pairs) {
    const double delta_norm = vec_norm(pair.delta);
    if (delta_norm > 0.0) {
      best = std::max(best, vec_norm(pair.epsilon) / delta_norm);
    }
  }
  if (best < 0.0) {
    throw std::invalid_argument("estimate_lipschitz: no pair with a nonzero model difference");
  }
  return best;
}

double theorem1_bound(const BoundInputs& inputs) {
  if (inputs.lipschitz < 0.0) throw std::invalid_argument("theorem1_bound: K must be >= 0");
  if (inputs.rounds < 0) throw std::invalid_argument("theorem1_bound: negative round count");
  if (static_cast<int>(inputs.gamma_norms.size()) != inputs.rounds) {
    throw std::invalid_argument("theorem1_bound: need one gamma norm per round");
  }
  if (inputs.rounds <= 1) return 0.0;

  const double a = 1.0 + inputs.lipschitz;
  const double b = std::abs(1.0 + inputs.alpha);
  double sum = 0.0;
  for (int j = 0; j <= inputs.rounds - 2; ++j) {
    const int n = inputs.rounds - 1 - j;
    const double coef = std::abs(a - b) < 1e-12
                            ? static_cast<double>(n) * std::pow(a, n - 1)
                            : (std::pow(a, n) - std::pow(b, n)) / (a - b);
    sum += coef * inputs.gamma_norms[j];
  }
  return (inputs.lipschitz + std::abs(inputs.alpha)) * sum;
}

std::vector<double> gamma_norms_from_store(const UpdateStore& store, int target_client) {
  return unlearn_recursion(store, target_client, 0.0, UnlearnMode::kFastFedul).gamma_norms;
}

}  // namespace fful
