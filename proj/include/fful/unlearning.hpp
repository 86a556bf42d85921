#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fful/federation.hpp"
#include "fful/model.hpp"
#include "fful/update_store.hpp"

namespace fful {

enum class UnlearnMode { kFastFedul, kNaive, kPartialSkew, kRandomSampleAblation };

std::string to_string(UnlearnMode mode);
UnlearnMode unlearn_mode_from_string(const std::string& name);

struct UnlearnConfig {
  int target_client = 0;
  double alpha = 0.0;  // Lipschitz coefficient, recommended 0.05..0.1
  UnlearnMode mode = UnlearnMode::kFastFedul;
};

struct UnlearnReport {
  MlpModel unlearned_model;
  ParamVector delta;                // Delta'_T such that unlearned = M_T + delta
  std::vector<double> gamma_norms;  // per stored round
  std::optional<double> bound;
  double wall_time = 0.0;
};

struct RecursionResult {
  ParamVector delta;
  std::vector<double> gamma_norms;
};

// The skew-compensated recursion over the stored history:
//   Delta_t = factor_t * Delta_{t-1}
//           + (1/(N(N-1))) * sum of the round's non-target stored updates
//           - (1/N) * the target's stored update (zero when unsampled),
// with factor (1+alpha), or (1+alpha) only for the first half of the rounds
// in partial-skew mode. Touches nothing but the store.
RecursionResult unlearn_recursion(const UpdateStore& store, int target_client, double alpha,
                                  UnlearnMode mode);

// Training-free removal of the target client: M_T plus the recursion's final
// difference. random_sample_ablation shares this arithmetic (it differs only
// in how the consumed store was sampled at training time).
UnlearnReport fast_fedul(const MlpModel& final_model, const UpdateStore& store,
                         const UnlearnConfig& cfg);

// Gradient-ascent ablation: subtract (1/N) times the target's stored updates.
MlpModel naive_unlearn(const MlpModel& final_model, const UpdateStore& store, int target_client);

// Skew compensation for the first half of the rounds only.
MlpModel ablation_partial_skew(const MlpModel& final_model, const UpdateStore& store,
                               const UnlearnConfig& cfg);

struct SkewPair {
  ParamVector delta;    // retrained minus original global model at round t
  ParamVector epsilon;  // mean update skew over the round's non-target clients
};

struct RetrainTrace {
  MlpModel final_model;
  double wall_time = 0.0;
  std::vector<SkewPair> skew_pairs;  // filled when original round models are given
};

// Replays training without the target client: per round, the stored sampled
// set minus the target retrains from the current replayed model and is
// aggregated with divisor N-1. Deterministic: streams match the original run.
MlpModel retrain_oracle(const FedConfig& cfg, const FederatedDataset& fed, const MlpSpec& spec,
                        const UpdateStore& store, int target_client);

// Same replay; when the original run's round models M_0..M_T are provided,
// also recomputes the original updates to produce per-round skew pairs.
RetrainTrace retrain_with_trace(const FedConfig& cfg, const FederatedDataset& fed,
                                const MlpSpec& spec, const UpdateStore& store, int target_client,
                                const std::vector<ParamVector>* original_round_models);

// Largest observed ||epsilon_t|| / ||delta_t|| over pairs with nonzero delta.
double estimate_lipschitz(std::span<const SkewPair> pairs);

struct BoundInputs {
  double lipschitz = 0.0;  // K, >= 0
  double alpha = 0.0;
  std::vector<double> gamma_norms;  // one per round; the last does not enter
  int rounds = 0;                   // T
};

// (K+|a|) * sum_{j=0}^{T-2} ((1+K)^{T-1-j} - |1+a|^{T-1-j}) / ((1+K) - |1+a|)
// * ||gamma_j||, with the analytic limit when the denominator degenerates.
double theorem1_bound(const BoundInputs& inputs);

// ||gamma_j|| per round, straight from the store.
std::vector<double> gamma_norms_from_store(const UpdateStore& store, int target_client);

}  // namespace fful
