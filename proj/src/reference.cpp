#include "fful/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fful/federation.hpp"

namespace fful::reference {
namespace {

// Straightforward forward pass; returns per-layer post-activations with the
// output probabilities last.
std::vector<std::vector<double>> forward_all(const MlpModel& model, std::span<const double> x) {
  const auto sizes = model.spec.layer_sizes();
  std::vector<std::vector<double>> act(sizes.size());
  act[0].assign(x.begin(), x.end());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* w = model.params.data() + offset;
    const double* b = w + static_cast<std::size_t>(in) * out;
    act[l + 1].resize(out);
    for (int o = 0; o < out; ++o) {
      double z = b[o];
      for (int i = 0; i < in; ++i) z += w[static_cast<std::size_t>(o) * in + i] * act[l][i];
      act[l + 1][o] = (l + 2 < sizes.size()) ? std::max(0.0, z) : z;
    }
    offset += static_cast<std::size_t>(in) * out + out;
  }
  return act;
}

}  // namespace

double vec_dot(const ParamVector& a, const ParamVector& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("reference::vec_dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

double vec_norm(const ParamVector& a) { return std::sqrt(reference::vec_dot(a, a)); }

LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("reference::loss_and_grad: empty dataset");
  const auto sizes = model.spec.layer_sizes();
  const std::size_t dim = model.params.dim();
  LossGrad result;
  result.grad = ParamVector(dim);

  for (std::size_t s = 0; s < ds.size(); ++s) {
    const auto act = forward_all(model, ds.row(s));
    const std::vector<double>& logits = act.back();
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    std::vector<double> probs(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
      probs[c] = std::exp(logits[c] - zmax);
      sum += probs[c];
    }
    for (double& p : probs) p /= sum;
    result.loss += zmax + std::log(sum) - logits[ds.labels[s]];

    std::vector<double> dout = probs;
    dout[ds.labels[s]] -= 1.0;
    std::size_t offset = dim;
    for (std::size_t l = sizes.size() - 1; l-- > 0;) {
      const int in = sizes[l];
      const int out = sizes[l + 1];
      offset -= static_cast<std::size_t>(in) * out + out;
      const double* w = model.params.data() + offset;
      double* gw = result.grad.data() + offset;
      double* gb = gw + static_cast<std::size_t>(in) * out;
      for (int o = 0; o < out; ++o) {
        for (int i = 0; i < in; ++i) gw[static_cast<std::size_t>(o) * in + i] += dout[o] * act[l][i];
        gb[o] += dout[o];
      }
      if (l > 0) {
        std::vector<double> din(in, 0.0);
        for (int i = 0; i < in; ++i) {
          double acc = 0.0;
          for (int o = 0; o < out; ++o) acc += w[static_cast<std::size_t>(o) * in + i] * dout[o];
          din[i] = act[l][i] > 0.0 ? acc : 0.0;
        }
        dout = std::move(din);
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(ds.size());
  result.loss *= inv_n;
  for (std::size_t d = 0; d < dim; ++d) result.grad[d] *= inv_n;
  return result;
}

std::vector<ParamVector> round_updates(const MlpModel& global,
                                       const std::vector<LabeledDataset>& clients, int epochs,
                                       int batch_size, double learning_rate,
                                       std::span<const std::uint64_t> streams) {
  std::vector<ParamVector> updates(clients.size());
  for (std::size_t i = 0; i < clients.size(); ++i) {
    updates[i] = local_train(global, clients[i], epochs, batch_size, learning_rate, streams[i]);
  }
  return updates;
}

ParamVector unlearn_delta(const UpdateStore& store, int target_client, double alpha) {
  const double n = static_cast<double>(store.num_clients);
  ParamVector delta(store.dim);
  for (const RoundRecord& rec : store.records) {
    ParamVector gamma(store.dim);
    for (const StoredUpdate& e : rec.entries) {
      if (static_cast<int>(e.client_id) == target_client) {
        for (std::size_t d = 0; d < store.dim; ++d) gamma[d] += (-1.0 / n) * e.update[d];
      } else {
        for (std::size_t d = 0; d < store.dim; ++d) gamma[d] += e.update[d] / (n * (n - 1.0));
      }
    }
    for (std::size_t d = 0; d < store.dim; ++d) delta[d] = (1.0 + alpha) * delta[d] + gamma[d];
  }
  return delta;
}

}  // namespace fful::reference
