#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fful/data.hpp"
#include "fful/param_vector.hpp"

namespace fful {

struct ModelIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Feed-forward classifier shape: ReLU hidden layers, softmax output.
struct MlpSpec {
  int input_dim = 0;
  std::vector<int> hidden_dims;
  int num_classes = 0;

  int param_count() const;
  std::vector<int> layer_sizes() const;  // input, hidden..., num_classes
  // Flat layout: per layer, the weight matrix (row-major, one row per output
  // unit) followed by the bias vector.
  std::string layout_description() const;
  void validate() const;

  bool operator==(const MlpSpec& other) const = default;
};

struct MlpModel {
  MlpSpec spec;
  ParamVector params;
};

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero;
// deterministic given the seed.
MlpModel init_model(const MlpSpec& spec, std::uint64_t seed);

// Class probabilities for one input (softmax with max subtraction).
std::vector<double> forward(const MlpModel& model, std::span<const double> x);
int predict_class(const MlpModel& model, std::span<const double> x);

// Mean cross-entropy and its exact gradient over the given samples.
LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds,
                       std::span<const std::size_t> indices);
LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds);

// Fraction of argmax-correct predictions; ties break toward the lowest class.
double predict_accuracy(const MlpModel& model, const LabeledDataset& ds);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace fful
