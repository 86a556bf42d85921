// Wall-time comparison of the OpenMP kernels against the serial reference
// implementations, on roughly image-classifier-sized workloads.

#include <chrono>
#include <cstdio>
#include <vector>

#include "fful/data.hpp"
#include "fful/federation.hpp"
#include "fful/model.hpp"
#include "fful/parallel.hpp"
#include "fful/param_vector.hpp"
#include "fful/reference.hpp"
#include "fful/rng.hpp"
#include "fful/unlearning.hpp"
#include "fful/update_store.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    f();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    if (s < best) best = s;
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.4f ms %10.4f ms %8.2fx\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

fful::ParamVector random_vector(std::size_t dim, std::uint64_t seed) {
  fful::Rng rng(seed);
  std::vector<double> v(dim);
  for (double& x : v) x = rng.next_gaussian();
  return fful::ParamVector(std::move(v));
}

}  // namespace

int main() {
  const int threads = fful::max_threads();
  std::printf("threads: %d\n", threads);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    const auto a = random_vector(2'000'000, 1);
    const auto b = random_vector(2'000'000, 2);
    double sink = 0.0;
    const double serial = time_best_of(5, [&] { sink += fful::reference::vec_dot(a, b); });
    const double parallel = time_best_of(5, [&] { sink += fful::vec_dot(a, b); });
    report("dot dim=2e6", serial, parallel);
    const double nserial = time_best_of(5, [&] { sink += fful::reference::vec_norm(a); });
    const double nparallel = time_best_of(5, [&] { sink += fful::vec_norm(a); });
    report("norm dim=2e6", nserial, nparallel);
    (void)sink;
  }

  fful::MlpSpec spec{784, {32}, 10};
  const fful::MlpModel model = fful::init_model(spec, 99);
  const auto images = fful::make_blobs(10, 200, 784, 0.25, 42);
  {
    const double serial = time_best_of(3, [&] { fful::reference::loss_and_grad(model, images); });
    const double parallel = time_best_of(3, [&] { fful::loss_and_grad(model, images); });
    report("loss_and_grad batch=2000", serial, parallel);
  }

  {
    std::vector<fful::LabeledDataset> clients;
    std::vector<std::uint64_t> streams;
    for (int i = 0; i < 8; ++i) {
      clients.push_back(fful::make_blobs(10, 60, 784, 0.25, 100 + i));
      streams.push_back(fful::stream_key(7, fful::StreamPurpose::kLocalTrain, 0, i));
    }
    const double serial = time_best_of(3, [&] {
      fful::reference::round_updates(model, clients, 1, 32, 0.05, streams);
    });
    const double parallel = time_best_of(3, [&] {
      std::vector<fful::ParamVector> updates(clients.size());
      fful::parallel_for(clients.size(), [&](std::size_t i) {
        updates[i] = fful::local_train(model, clients[i], 1, 32, 0.05, streams[i]);
      });
    });
    report("round_updates 8 clients", serial, parallel);
  }

  return 0;
}
