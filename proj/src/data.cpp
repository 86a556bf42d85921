#include "fful/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fful/rng.hpp"

namespace fful {
namespace {

constexpr std::uint32_t kIdxImageMagic = 2051;
constexpr std::uint32_t kIdxLabelMagic = 2049;

std::uint32_t read_be_u32(std::istream& in, const std::string& path, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw IdxTruncatedError(path + ": truncated while reading " + what);
  return (static_cast<std::uint32_t>(bytes[0]) << 24) | (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

int bits_for(int num_classes) {
  int bits = 1;
  while ((1 << bits) < num_classes) ++bits;
  return bits;
}

// Even dims carry the class pattern, odd dims are a shared low-intensity
// background (image borders, in effect), which gives pixel triggers a home
// that benign data never constrains.
double blob_center(int cls, int dim_index, int bits) {
  if (dim_index % 2 != 0) return 0.1;
  return ((cls >> ((dim_index / 2) % bits)) & 1) ? 0.7 : 0.3;
}

// Fisher-Yates; only the first `take` positions are needed by some callers.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

void apply_trigger(LabeledDataset& ds, std::size_t sample, const BackdoorConfig& cfg) {
  double* base = ds.features.data() + sample * static_cast<std::size_t>(ds.input_dim);
  for (const auto& [r, c] : cfg.trigger_pixels) {
    base[r * ds.image_cols + c] = cfg.trigger_value;
  }
}

void append_sample(LabeledDataset& dst, const LabeledDataset& src, std::size_t sample, int label) {
  const auto row = src.row(sample);
  dst.features.insert(dst.features.end(), row.begin(), row.end());
  dst.labels.push_back(label);
}

}  // namespace

void LabeledDataset::validate() const {
  if (input_dim <= 0) throw DataError("dataset has non-positive input_dim");
  if (image_rows * image_cols != input_dim) {
    throw DataError("dataset image geometry does not match input_dim");
  }
  if (features.size() != labels.size() * static_cast<std::size_t>(input_dim)) {
    throw DataError("dataset feature matrix does not match label count");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) throw DataError("dataset label out of range");
  }
}

void BackdoorConfig::validate(const LabeledDataset& ds) const {
  if (trigger_pixels.empty()) throw DataError("backdoor trigger has no pixels");
  for (const auto& [r, c] : trigger_pixels) {
    if (r < 0 || r >= ds.image_rows || c < 0 || c >= ds.image_cols) {
      throw DataError("backdoor trigger pixel outside image bounds");
    }
  }
  if (trigger_value < 0.0 || trigger_value > 1.0) {
    throw DataError("backdoor trigger value outside [0,1]");
  }
  if (target_label < 0 || target_label >= ds.num_classes) {
    throw DataError("backdoor target label out of range");
  }
  if (!(poison_fraction > 0.0) || poison_fraction > 1.0) {
    throw DataError("backdoor poison fraction outside (0,1]");
  }
}

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw DataError("cannot open IDX image file: " + images_path);
  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw DataError("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_be_u32(imgs, images_path, "magic");
  if (img_magic != kIdxImageMagic) {
    throw IdxFormatError(images_path + ": bad IDX image magic " + std::to_string(img_magic));
  }
  const std::uint32_t lab_magic = read_be_u32(labs, labels_path, "magic");
  if (lab_magic != kIdxLabelMagic) {
    throw IdxFormatError(labels_path + ": bad IDX label magic " + std::to_string(lab_magic));
  }

  const std::uint32_t n_images = read_be_u32(imgs, images_path, "count");
  const std::uint32_t rows = read_be_u32(imgs, images_path, "rows");
  const std::uint32_t cols = read_be_u32(imgs, images_path, "cols");
  const std::uint32_t n_labels = read_be_u32(labs, labels_path, "count");
  if (n_images != n_labels) {
    throw IdxCountError(images_path + ": image count " + std::to_string(n_images) +
                        " does not match label count " + std::to_string(n_labels));
  }
  if (rows == 0 || cols == 0) throw IdxFormatError(images_path + ": zero image dimensions");

  LabeledDataset ds;
  ds.image_rows = static_cast<int>(rows);
  ds.image_cols = static_cast<int>(cols);
  ds.input_dim = static_cast<int>(rows * cols);
  ds.labels.resize(n_images);
  ds.features.resize(static_cast<std::size_t>(n_images) * rows * cols);

  std::vector<unsigned char> pixel_buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    imgs.read(reinterpret_cast<char*>(pixel_buf.data()), pixel_buf.size());
    if (!imgs) throw IdxTruncatedError(images_path + ": truncated pixel data at image " + std::to_string(i));
    double* out = ds.features.data() + static_cast<std::size_t>(i) * rows * cols;
    for (std::size_t p = 0; p < pixel_buf.size(); ++p) out[p] = pixel_buf[p] / 255.0;
  }
  std::vector<unsigned char> label_buf(n_labels);
  labs.read(reinterpret_cast<char*>(label_buf.data()), label_buf.size());
  if (!labs) throw IdxTruncatedError(labels_path + ": truncated label data");

  int max_label = 0;
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    ds.labels[i] = label_buf[i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = max_label + 1;
  ds.validate();
  return ds;
}

LabeledDataset make_blobs(int num_classes, int samples_per_class, int input_dim, double spread,
                          std::uint64_t seed) {
  if (num_classes < 2 || samples_per_class <= 0 || input_dim <= 0 || spread < 0.0) {
    throw DataError("make_blobs: invalid sizes");
  }
  LabeledDataset ds;
  ds.input_dim = input_dim;
  ds.image_rows = 1;
  ds.image_cols = input_dim;
  ds.num_classes = num_classes;
  ds.features.reserve(static_cast<std::size_t>(num_classes) * samples_per_class * input_dim);
  ds.labels.reserve(static_cast<std::size_t>(num_classes) * samples_per_class);

  const int bits = bits_for(num_classes);
  Rng rng(stream_key(seed, StreamPurpose::kBlobs));
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s) {
      for (int d = 0; d < input_dim; ++d) {
        const double v = blob_center(c, d, bits) + spread * rng.next_gaussian();
        ds.features.push_back(std::clamp(v, 0.0, 1.0));
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

std::vector<LabeledDataset> partition_dirichlet(const LabeledDataset& ds, int num_clients,
                                                double non_iid_ratio, std::uint64_t seed) {
  ds.validate();
  if (num_clients < 2) throw DataError("partition requires at least 2 clients");
  if (non_iid_ratio < 1.0) throw DataError("non_iid_ratio must be >= 1");

  const int K = ds.num_classes;
  std::vector<std::vector<std::size_t>> by_class(K);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  for (int c = 0; c < K; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(num_clients)) {
      throw DataError("dataset too small: class " + std::to_string(c) + " has " +
                      std::to_string(by_class[c].size()) + " samples for " +
                      std::to_string(num_clients) + " clients");
    }
  }

  Rng rng(stream_key(seed, StreamPurpose::kPartition));

  // Per-client class proportions. The preferred class is pinned at `ratio`
  // and one class at 1, so the most/least proportion ratio is exact; the
  // remaining classes get Dirichlet(10) jittered weights between the two.
  std::vector<std::vector<double>> weight(num_clients, std::vector<double>(K, 1.0));
  for (int i = 0; i < num_clients; ++i) {
    const int preferred = i % K;
    weight[i][preferred] = non_iid_ratio;
    if (K > 2 && non_iid_ratio > 1.0) {
      const int pinned_min = (preferred + 1) % K;
      std::vector<double> gamma;
      for (int c = 0; c < K; ++c) {
        if (c == preferred || c == pinned_min) continue;
        double g = 0.0;
        for (int k = 0; k < 10; ++k) g += -std::log(1.0 - rng.next_uniform());
        gamma.push_back(g);
      }
      const double total = std::accumulate(gamma.begin(), gamma.end(), 0.0);
      std::size_t gi = 0;
      for (int c = 0; c < K; ++c) {
        if (c == preferred || c == pinned_min) continue;
        const double share = gamma[gi++] / total * static_cast<double>(gamma.size());
        weight[i][c] = 1.0 + (non_iid_ratio - 1.0) * std::min(1.0, 0.5 * share);
      }
    }
  }

  // Integer counts per class via largest remainder, so the class pools are
  // split exactly and the union of client data equals the input.
  std::vector<std::vector<std::size_t>> count(num_clients, std::vector<std::size_t>(K, 0));
  for (int c = 0; c < K; ++c) {
    double total_w = 0.0;
    for (int i = 0; i < num_clients; ++i) total_w += weight[i][c];
    const std::size_t available = by_class[c].size();
    std::vector<double> remainder(num_clients);
    std::size_t assigned = 0;
    for (int i = 0; i < num_clients; ++i) {
      const double raw = static_cast<double>(available) * weight[i][c] / total_w;
      count[i][c] = static_cast<std::size_t>(raw);
      remainder[i] = raw - static_cast<double>(count[i][c]);
      assigned += count[i][c];
    }
    std::vector<int> order(num_clients);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::size_t extra = 0; extra < available - assigned; ++extra) {
      ++count[order[extra % order.size()]][c];
    }
    for (int i = 0; i < num_clients; ++i) {
      if (count[i][c] == 0) {
        throw DataError("dataset too small: client " + std::to_string(i) +
                        " would receive no samples of class " + std::to_string(c));
      }
    }
  }

  for (int c = 0; c < K; ++c) shuffle_indices(by_class[c], rng);

  std::vector<LabeledDataset> clients(num_clients);
  for (int i = 0; i < num_clients; ++i) {
    clients[i].input_dim = ds.input_dim;
    clients[i].image_rows = ds.image_rows;
    clients[i].image_cols = ds.image_cols;
    clients[i].num_classes = ds.num_classes;
  }
  for (int c = 0; c < K; ++c) {
    std::size_t cursor = 0;
    for (int i = 0; i < num_clients; ++i) {
      for (std::size_t k = 0; k < count[i][c]; ++k) {
        const std::size_t sample = by_class[c][cursor++];
        append_sample(clients[i], ds, sample, ds.labels[sample]);
      }
    }
  }
  return clients;
}

LabeledDataset poison_client(const LabeledDataset& ds, const BackdoorConfig& cfg,
                             std::uint64_t seed) {
  ds.validate();
  cfg.validate(ds);
  LabeledDataset out = ds;
  const std::size_t copies =
      static_cast<std::size_t>(cfg.poison_fraction * static_cast<double>(ds.size()));
  if (copies == 0) return out;

  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(stream_key(seed, StreamPurpose::kPoison));
  shuffle_indices(idx, rng);

  for (std::size_t k = 0; k < copies; ++k) {
    append_sample(out, ds, idx[k], cfg.target_label);
    apply_trigger(out, out.size() - 1, cfg);
  }
  return out;
}

LabeledDataset make_backdoor_testset(const LabeledDataset& ds, const BackdoorConfig& cfg) {
  ds.validate();
  if (ds.size() == 0) throw DataError("backdoor test set source is empty");
  cfg.validate(ds);

  LabeledDataset out;
  out.input_dim = ds.input_dim;
  out.image_rows = ds.image_rows;
  out.image_cols = ds.image_cols;
  out.num_classes = ds.num_classes;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == cfg.target_label) continue;
    append_sample(out, ds, i, cfg.target_label);
    apply_trigger(out, out.size() - 1, cfg);
  }
  if (out.size() == 0) {
    throw DataError("backdoor test set is empty: every sample already has the target label");
  }
  return out;
}

}  // namespace fful
