#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fful {

// Number of worker threads kernels may use. Defaults to the OpenMP thread
// count capped by the FFUL_THREADS environment variable.
int max_threads();
void set_max_threads(int n);

namespace detail {
void run_indexed(std::size_t count, void* ctx, void (*fn)(void*, std::size_t));
}

// Runs f(i) for i in [0, count). Iterations must be independent.
template <typename F>
void parallel_for(std::size_t count, F&& f) {
  auto thunk = [](void* ctx, std::size_t i) { (*static_cast<F*>(ctx))(i); };
  detail::run_indexed(count, &f, thunk);
}

// Runs f(lo, hi) over fixed-size chunks of [0, count). Chunk boundaries do not
// depend on the thread count.
template <typename F>
void parallel_chunks(std::size_t count, std::size_t chunk, F&& f) {
  const std::size_t nchunks = (count + chunk - 1) / chunk;
  if (nchunks <= 1) {
    f(std::size_t{0}, count);
    return;
  }
  parallel_for(nchunks, [&](std::size_t b) {
    const std::size_t lo = b * chunk;
    f(lo, std::min(count, lo + chunk));
  });
}

inline constexpr std::size_t kSumBlock = 2048;

// Reduction over a fixed block grid: block partials are combined in block
// order, so the result is bit-identical for any thread count.
template <typename F>
double blocked_sum(std::size_t count, F&& f) {
  if (count <= kSumBlock) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += f(i);
    return acc;
  }
  const std::size_t nblocks = (count + kSumBlock - 1) / kSumBlock;
  std::vector<double> partial(nblocks, 0.0);
  parallel_for(nblocks, [&](std::size_t b) {
    const std::size_t lo = b * kSumBlock;
    const std::size_t hi = std::min(count, lo + kSumBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += f(i);
    partial[b] = acc;
  });
  double acc = 0.0;
  for (double p : partial) acc += p;
  return acc;
}

}  // namespace fful
