#include "fful/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fful/rng.hpp"

namespace fful {

SamplingPlan compute_probabilities(std::span<const double> norms, int m) {
  const int n = static_cast<int>(norms.size());
  if (n == 0) throw std::invalid_argument("compute_probabilities: no participants");
  if (m < 1 || m > n) {
    throw std::invalid_argument("compute_probabilities: m must be in [1, N], got " +
                                std::to_string(m));
  }
  bool any_positive = false;
  for (double v : norms) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("compute_probabilities: norms must be finite and >= 0");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw std::invalid_argument("compute_probabilities: all norms are zero");

  std::vector<double> sorted(norms.begin(), norms.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];

  // Largest l with 0 < m + l - n <= (sum of the l smallest norms) / (l-th
  // smallest norm); a zero l-th norm makes the ratio unbounded.
  int l = 0;
  for (int cand = n; cand >= 1; --cand) {
    const int excess = m + cand - n;
    if (excess <= 0) break;
    if (sorted[cand - 1] == 0.0 ||
        static_cast<double>(excess) <= prefix[cand] / sorted[cand - 1]) {
      l = cand;
      break;
    }
  }
  if (l == 0) throw std::runtime_error("compute_probabilities: no feasible threshold");

  const double threshold = l < n ? sorted[l] : std::numeric_limits<double>::infinity();
  const double scale = static_cast<double>(m + l - n) / prefix[l];

  SamplingPlan plan;
  plan.threshold_index = l;
  plan.expected_size = static_cast<double>(m);
  plan.probabilities.resize(n);
  for (int i = 0; i < n; ++i) {
    double p = norms[i] < threshold ? norms[i] * scale : 1.0;
    if (p <= 0.0) p = kProbabilityFloor;
    plan.probabilities[i] = std::min(p, 1.0);
  }
  return plan;
}

SamplingPlan uniform_plan(int num_participants, int m) {
  if (num_participants < 1 || m < 1 || m > num_participants) {
    throw std::invalid_argument("uniform_plan: invalid sizes");
  }
  SamplingPlan plan;
  plan.threshold_index = num_participants;
  plan.expected_size = static_cast<double>(m);
  plan.probabilities.assign(num_participants,
                            static_cast<double>(m) / static_cast<double>(num_participants));
  return plan;
}

std::vector<int> draw_sample(const SamplingPlan& plan, std::uint64_t seed) {
  std::vector<int> sampled;
  for (int i = 0; i < static_cast<int>(plan.probabilities.size()); ++i) {
    Rng rng(stream_key(seed, StreamPurpose::kSampling, static_cast<std::uint64_t>(i)));
    if (rng.next_uniform() < plan.probabilities[i]) sampled.push_back(i);
  }
  return sampled;
}

ParamVector ip_aggregate(std::span<const double> probabilities,
                         std::span<const ParamVector> updates) {
  if (probabilities.size() != updates.size()) {
    throw std::invalid_argument("ip_aggregate: probabilities/updates size mismatch");
  }
  if (updates.empty()) throw std::invalid_argument("ip_aggregate: empty sample");
  ParamVector acc(updates[0].dim());
  for (std::size_t j = 0; j < updates.size(); ++j) {
    if (!(probabilities[j] > 0.0)) {
      throw std::invalid_argument("ip_aggregate: probability must be positive");
    }
    vec_axpy_inplace(acc, 1.0 / probabilities[j], updates[j]);
  }
  return acc;
}

double variance_bound(std::span<const double> norms, const SamplingPlan& plan) {
  if (norms.size() != plan.probabilities.size()) {
    throw std::invalid_argument("variance_bound: norms/plan size mismatch");
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const double p = plan.probabilities[i];
    bound += (1.0 - p) / p * norms[i] * norms[i];
  }
  return bound;
}

}  // namespace fful
