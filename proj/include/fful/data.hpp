#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fful {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdxFormatError : DataError {
  using DataError::DataError;
};
struct IdxCountError : DataError {
  using DataError::DataError;
};
struct IdxTruncatedError : DataError {
  using DataError::DataError;
};

// Labeled samples with features in [0, 1]. Images keep their geometry;
// non-image data uses a single row of input_dim columns.
struct LabeledDataset {
  int input_dim = 0;
  int image_rows = 1;
  int image_cols = 0;
  int num_classes = 0;
  std::vector<double> features;  // row-major, size() == labels.size() * input_dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(input_dim),
            static_cast<std::size_t>(input_dim)};
  }
  void validate() const;
};

struct FederatedDataset {
  std::vector<LabeledDataset> clients;  // index == client id
  LabeledDataset test_main;
  LabeledDataset test_backdoor;
};

struct BackdoorConfig {
  std::vector<std::pair<int, int>> trigger_pixels;  // (row, col)
  double trigger_value = 1.0;
  int target_label = 0;
  double poison_fraction = 0.0;  // fraction of clean samples copied and poisoned

  void validate(const LabeledDataset& ds) const;
};

// IDX image/label pair (big-endian headers, magic 2051/2049), pixels scaled
// to [0,1] by division by 255.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Isotropic Gaussians around fixed per-class hypercube vertices, clamped to
// [0,1]. Deterministic  given the seed; samples are grouped by class.
LabeledDataset make_blobs(int num_classes, int samples_per_class, int input_dim, double spread,
                          std::uint64_t seed);

// Splits the dataset into num_clients disjoint parts whose per-client class
// frequencies realize the requested most/least-frequent ratio.
std::vector<LabeledDataset> partition_dirichlet(const LabeledDataset& ds, int num_clients,
                                                double non_iid_ratio, std::uint64_t seed);

// Appends floor(poison_fraction * |ds|) triggered copies with the target
// label; the original rows are untouched.
LabeledDataset poison_client(const LabeledDataset& ds, const BackdoorConfig& cfg,
                             std::uint64_t seed);

// Triggered copy of every sample whose label differs from the target label.
LabeledDataset make_backdoor_testset(const LabeledDataset& ds, const BackdoorConfig& cfg);

}  // namespace fful
