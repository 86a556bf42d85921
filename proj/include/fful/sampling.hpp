#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fful/param_vector.hpp"

namespace fful {

// Zero-norm participants keep a tiny positive probability so that
// inverse-probability weights stay finite.
inline constexpr double kProbabilityFloor = 1e-6;

struct SamplingPlan {
  std::vector<double> probabilities;  // per participant, same order as the norms
  int threshold_index = 0;            // l: participants above the l-th smallest norm get p = 1
  double expected_size = 0.0;         // m
};

// Optimal independent-sampling probabilities for the given update norms and
// expected sample size m: p_i proportional to the norm below the threshold,
// 1 above it.
SamplingPlan compute_probabilities(std::span<const double> norms, int m);

// Uniform p_i = m / N, used by the random-sampling ablation.
SamplingPlan uniform_plan(int num_participants, int m);

// Independent Bernoulli draws; participant i is included iff its own hashed
// uniform falls below p_i, so draws do not depend on other participants.
std::vector<int> draw_sample(const SamplingPlan& plan, std::uint64_t seed);

// Inverse-probability estimator of the full-participation sum.
ParamVector ip_aggregate(std::span<const double> probabilities,
                         std::span<const ParamVector> updates);

// Upper bound on E || ip_aggregate - full sum ||^2 for independent sampling;
// attains equality for the optimal plan.
double variance_bound(std::span<const double> norms, const SamplingPlan& plan);

}  // namespace fful
