#include "fful/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fful {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Last-layer weight matrix: num_classes rows of last_in columns, located just
// before the final bias vector in the flat layout.
struct LastLayer {
  const double* weights;
  int rows;
  int cols;
};

LastLayer last_layer(const MlpModel& model) {
  const auto sizes = model.spec.layer_sizes();
  const int in = sizes[sizes.size() - 2];
  const int out = sizes.back();
  const std::size_t offset =
      model.params.dim() - static_cast<std::size_t>(out) - static_cast<std::size_t>(in) * out;
  return LastLayer{model.params.data() + offset, out, in};
}

double angle_deg(const double* a, const double* b, std::size_t n) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw std::invalid_argument("deviation angle undefined for a zero vector");
  }
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return std::acos(cosine) * 180.0 / kPi;
}

}  // namespace

std::pair<double, double> evaluate(const MlpModel& model, const FederatedDataset& fed) {
  const double main_acc = predict_accuracy(model, fed.test_main);
  const double backdoor_acc = predict_accuracy(model, fed.test_backdoor);
  return {main_acc, backdoor_acc};
}

double deviation_angle(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("deviation_angle: dimension mismatch");
  return angle_deg(a.data(), b.data(), a.dim());
}

DeviationSummary deviation_histogram(const MlpModel& a, const MlpModel& b) {
  if (!(a.spec == b.spec)) throw std::invalid_argument("deviation_histogram: spec mismatch");
  const LastLayer la = last_layer(a);
  const LastLayer lb = last_layer(b);

  DeviationSummary summary;
  summary.histogram.assign(kDeviationBins, 0);
  double total = 0.0;
  for (int r = 0; r < la.rows; ++r) {
    const double angle = angle_deg(la.weights + static_cast<std::size_t>(r) * la.cols,
                                   lb.weights + static_cast<std::size_t>(r) * lb.cols, la.cols);
    total += angle;
    const int bin = std::min(kDeviationBins - 1, static_cast<int>(angle / kDeviationBinDegrees));
    ++summary.histogram[bin];
  }
  summary.mean_deg = total / la.rows;
  return summary;
}

double whole_layer_deviation(const MlpModel& a, const MlpModel& b) {
  if (!(a.spec == b.spec)) throw std::invalid_argument("whole_layer_deviation: spec mismatch");
  const LastLayer la = last_layer(a);
  const LastLayer lb = last_layer(b);
  return angle_deg(la.weights, lb.weights, static_cast<std::size_t>(la.rows) * la.cols);
}

}  // namespace fful
