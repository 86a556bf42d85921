#include "fful/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fful/parallel.hpp"
#include "fful/rng.hpp"

namespace fful {
namespace {

constexpr std::size_t kGradBlock = 256;

struct LayerView {
  const double* weights;  // out x in, row-major
  const double* biases;   // out
  int in = 0;
  int out = 0;
};

std::vector<LayerView> layer_views(const MlpSpec& spec, const double* params) {
  const auto sizes = spec.layer_sizes();
  std::vector<LayerView> layers(sizes.size() - 1);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    layers[l].in = sizes[l];
    layers[l].out = sizes[l + 1];
    layers[l].weights = params + offset;
    offset += static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
    layers[l].biases = params + offset;
    offset += sizes[l + 1];
  }
  return layers;
}

// Post-activation values per layer; the last entry holds softmax inputs
// (logits) before the probabilities are formed.
struct Scratch {
  std::vector<std::vector<double>> act;    // act[l] has layer_sizes[l] entries
  std::vector<double> probs;               // num_classes
  std::vector<std::vector<double>> delta;  // backprop buffers per layer output
};

Scratch make_scratch(const MlpSpec& spec) {
  const auto sizes = spec.layer_sizes();
  Scratch s;
  s.act.resize(sizes.size());
  for (std::size_t l = 0; l < sizes.size(); ++l) s.act[l].resize(sizes[l]);
  s.probs.resize(spec.num_classes);
  s.delta.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) s.delta[l].resize(sizes[l + 1]);
  return s;
}

// Fills scratch activations; returns log(sum(exp(logits - max))) + max.
double forward_into(const std::vector<LayerView>& layers, std::span<const double> x, Scratch& s) {
  std::copy(x.begin(), x.end(), s.act[0].begin());
  const std::size_t L = layers.size();
  for (std::size_t l = 0; l < L; ++l) {
    const LayerView& layer = layers[l];
    const std::vector<double>& in = s.act[l];
    std::vector<double>& out = s.act[l + 1];
    for (int o = 0; o < layer.out; ++o) {
      const double* w = layer.weights + static_cast<std::size_t>(o) * layer.in;
      double z = layer.biases[o];
      for (int i = 0; i < layer.in; ++i) z += w[i] * in[i];
      out[o] = (l + 1 < L) ? std::max(0.0, z) : z;
    }
  }
  std::vector<double>& logits = s.act[L];
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(s.probs.size()); ++c) {
    s.probs[c] = std::exp(logits[c] - zmax);
    sum += s.probs[c];
  }
  for (double& p : s.probs) p /= sum;
  return zmax + std::log(sum);
}

void check_input(const MlpSpec& spec, std::span<const double> x) {
  if (static_cast<int>(x.size()) != spec.input_dim) {
    throw std::invalid_argument("forward: input has dimension " + std::to_string(x.size()) +
                                ", model expects " + std::to_string(spec.input_dim));
  }
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw ModelIoError(path + ": checkpoint truncated");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

double get_f64(std::istream& in, const std::string& path) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw ModelIoError(path + ": checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

int MlpSpec::param_count() const {
  const auto sizes = layer_sizes();
  int count = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    count += sizes[l] * sizes[l + 1] + sizes[l + 1];
  }
  return count;
}

std::vector<int> MlpSpec::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden_dims.begin(), hidden_dims.end());
  sizes.push_back(num_classes);
  return sizes;
}

std::string MlpSpec::layout_description() const {
  std::string desc = "layer-major; per layer: weights row-major (out x in), then biases; sizes";
  for (int s : layer_sizes()) desc += " " + std::to_string(s);
  return desc;
}

void MlpSpec::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("MlpSpec: input_dim must be positive");
  for (int h : hidden_dims) {
    if (h <= 0) throw std::invalid_argument("MlpSpec: hidden dims must be positive");
  }
  if (num_classes < 2) throw std::invalid_argument("MlpSpec: need at least 2 classes");
}

MlpModel init_model(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params(static_cast<std::size_t>(spec.param_count()));
  Rng rng(stream_key(seed, StreamPurpose::kModelInit));
  const auto sizes = spec.layer_sizes();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    const std::size_t n_weights = static_cast<std::size_t>(sizes[l]) * sizes[l + 1];
    for (std::size_t k = 0; k < n_weights; ++k) {
      params[offset++] = (2.0 * rng.next_uniform() - 1.0) * bound;
    }
    offset += sizes[l + 1];  // biases stay zero
  }
  return MlpModel{spec, std::move(params)};
}

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  check_input(model.spec, x);
  const auto layers = layer_views(model.spec, model.params.data());
  Scratch s = make_scratch(model.spec);
  forward_into(layers, x, s);
  return s.probs;
}

int predict_class(const MlpModel& model, std::span<const double> x) {
  const auto probs = forward(model, x);
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds,
                       std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  if (ds.input_dim != model.spec.input_dim) {
    throw std::invalid_argument("loss_and_grad: dataset dimension mismatch");
  }
  for (std::size_t i : indices) {
    if (ds.labels[i] < 0 || ds.labels[i] >= model.spec.num_classes) {
      throw std::invalid_argument("loss_and_grad: label out of range");
    }
  }

  const std::size_t dim = model.params.dim();
  const std::size_t n = indices.size();
  const std::size_t nblocks = (n + kGradBlock - 1) / kGradBlock;
  std::vector<std::vector<double>> block_grad(nblocks);
  std::vector<double> block_loss(nblocks, 0.0);

  const auto layers = layer_views(model.spec, model.params.data());
  const std::size_t L = layers.size();

  parallel_for(nblocks, [&](std::size_t b) {
    std::vector<double> grad(dim, 0.0);
    double loss = 0.0;
    Scratch s = make_scratch(model.spec);
    const std::size_t lo = b * kGradBlock;
    const std::size_t hi = std::min(n, lo + kGradBlock);
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t sample = indices[k];
      const int label = ds.labels[sample];
      const double lse = forward_into(layers, ds.row(sample), s);
      loss += lse - s.act[L][label];

      std::vector<double>& dz = s.delta[L - 1];
      for (int c = 0; c < model.spec.num_classes; ++c) dz[c] = s.probs[c];
      dz[label] -= 1.0;

      std::size_t offset = dim;
      for (std::size_t l = L; l-- > 0;) {
        const LayerView& layer = layers[l];
        const std::vector<double>& in = s.act[l];
        std::vector<double>& dout = s.delta[l];
        offset -= static_cast<std::size_t>(layer.in) * layer.out + layer.out;
        double* gw = grad.data() + offset;
        double* gb = gw + static_cast<std::size_t>(layer.in) * layer.out;
        for (int o = 0; o < layer.out; ++o) {
          const double d = dout[o];
          double* gw_row = gw + static_cast<std::size_t>(o) * layer.in;
          for (int i = 0; i < layer.in; ++i) gw_row[i] += d * in[i];
          gb[o] += d;
        }
        if (l > 0) {
          std::vector<double>& din = s.delta[l - 1];
          for (int i = 0; i < layer.in; ++i) {
            double acc = 0.0;
            for (int o = 0; o < layer.out; ++o) {
              acc += layer.weights[static_cast<std::size_t>(o) * layer.in + i] * dout[o];
            }
            din[i] = in[i] > 0.0 ? acc : 0.0;
          }
        }
      }
    }
    block_grad[b] = std::move(grad);
    block_loss[b] = loss;
  });

  LossGrad result;
  result.grad = ParamVector(dim);
  double total_loss = 0.0;
  for (std::size_t b = 0; b < nblocks; ++b) {
    total_loss += block_loss[b];
    const std::vector<double>& g = block_grad[b];
    for (std::size_t d = 0; d < dim; ++d) result.grad[d] += g[d];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  result.loss = total_loss * inv_n;
  for (std::size_t d = 0; d < dim; ++d) result.grad[d] *= inv_n;
  if (!std::isfinite(result.loss)) throw std::runtime_error("loss_and_grad: non-finite loss");
  result.grad.check_finite("loss_and_grad");
  return result;
}

LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds) {
  std::vector<std::size_t> indices(ds.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  return loss_and_grad(model, ds, indices);
}

double predict_accuracy(const MlpModel& model, const LabeledDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("predict_accuracy: empty dataset");
  if (ds.input_dim != model.spec.input_dim) {
    throw std::invalid_argument("predict_accuracy: dataset dimension mismatch");
  }
  const auto layers = layer_views(model.spec, model.params.data());
  const std::size_t n = ds.size();
  const std::size_t nblocks = (n + kGradBlock - 1) / kGradBlock;
  std::vector<std::size_t> block_correct(nblocks, 0);
  parallel_for(nblocks, [&](std::size_t b) {
    Scratch s = make_scratch(model.spec);
    std::size_t correct = 0;
    const std::size_t lo = b * kGradBlock;
    const std::size_t hi = std::min(n, lo + kGradBlock);
    for (std::size_t i = lo; i < hi; ++i) {
      forward_into(layers, ds.row(i), s);
      const int pred =
          static_cast<int>(std::max_element(s.probs.begin(), s.probs.end()) - s.probs.begin());
      if (pred == ds.labels[i]) ++correct;
    }
    block_correct[b] = correct;
  });
  std::size_t correct = 0;
  for (std::size_t c : block_correct) correct += c;
  return static_cast<double>(correct) / static_cast<double>(n);
}

void save_model(const MlpModel& model, const std::string& path) {
  model.spec.validate();
  if (model.params.dim() != static_cast<std::size_t>(model.spec.param_count())) {
    throw ModelIoError("save_model: parameter count does not match spec");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelIoError("cannot open checkpoint for writing: " + path);
  out.write("FFCK", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(model.spec.input_dim));
  put_u32(out, static_cast<std::uint32_t>(model.spec.hidden_dims.size()));
  for (int h : model.spec.hidden_dims) put_u32(out, static_cast<std::uint32_t>(h));
  put_u32(out, static_cast<std::uint32_t>(model.spec.num_classes));
  put_u32(out, static_cast<std::uint32_t>(model.params.dim()));
  for (std::size_t d = 0; d < model.params.dim(); ++d) put_f64(out, model.params[d]);
  if (!out) throw ModelIoError("write failed for checkpoint: " + path);
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelIoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in) throw ModelIoError(path + ": checkpoint truncated");
  if (magic[0] != 'F' || magic[1] != 'F' || magic[2] != 'C' || magic[3] != 'K') {
    throw ModelIoError(path + ": bad checkpoint magic");
  }
  const std::uint32_t version = get_u32(in, path);
  if (version != 1) throw ModelIoError(path + ": unsupported checkpoint version");

  MlpSpec spec;
  spec.input_dim = static_cast<int>(get_u32(in, path));
  const std::uint32_t n_hidden = get_u32(in, path);
  for (std::uint32_t i = 0; i < n_hidden; ++i) {
    spec.hidden_dims.push_back(static_cast<int>(get_u32(in, path)));
  }
  spec.num_classes = static_cast<int>(get_u32(in, path));
  const std::uint32_t dim = get_u32(in, path);
  spec.validate();
  if (dim != static_cast<std::uint32_t>(spec.param_count())) {
    throw ModelIoError(path + ": checkpoint parameter count does not match its spec");
  }
  ParamVector params(dim);
  for (std::uint32_t d = 0; d < dim; ++d) params[d] = get_f64(in, path);
  if (in.peek() != EOF) throw ModelIoError(path + ": trailing bytes in checkpoint");
  params.check_finite("load_model");
  return MlpModel{std::move(spec), std::move(params)};
}

}  // namespace fful
