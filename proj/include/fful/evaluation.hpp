#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fful/data.hpp"
#include "fful/model.hpp"

namespace fful {

inline constexpr int kDeviationBinDegrees = 5;
inline constexpr int kDeviationBins = 180 / kDeviationBinDegrees;

struct DeviationSummary {
  double mean_deg = 0.0;
  std::vector<int> histogram;  // kDeviationBins buckets of 5 degrees
};

struct EvalReport {
  double main_acc = 0.0;
  double backdoor_acc = 0.0;
  std::map<std::string, double> wall_times;
  std::uint64_t stored_bytes = 0;
  std::optional<DeviationSummary> deviation;
};

// (main-task accuracy, fraction of backdoor-test samples classified as the
// trigger's target label). Both test sets must be non-empty.
std::pair<double, double> evaluate(const MlpModel& model, const FederatedDataset& fed);

// Angle between two nonzero vectors in degrees, cosine clamped to [-1, 1].
double deviation_angle(const ParamVector& a, const ParamVector& b);

// Per-class-row angle between the two models' last-layer weight matrices
// (biases excluded), with the mean and a 5-degree histogram.
DeviationSummary deviation_histogram(const MlpModel& a, const MlpModel& b);

// Angle between the flattened last-layer weight matrices.
double whole_layer_deviation(const MlpModel& a, const MlpModel& b);

}  // namespace fful
