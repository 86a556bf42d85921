#include "fful/parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fful {
namespace {

int env_thread_cap() {
  const char* env = std::getenv("FFUL_THREADS");
  if (env == nullptr) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

int initial_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  const int cap = env_thread_cap();
  if (cap > 0) n = std::min(n, cap);
  return std::max(1, n);
}

int& thread_limit() {
  static int limit = initial_threads();
  return limit;
}

}  // namespace

int max_threads() { return thread_limit(); }

void set_max_threads(int n) { thread_limit() = std::max(1, n); }

namespace detail {

void run_indexed(std::size_t count, void* ctx, void (*fn)(void*, std::size_t)) {
#ifdef _OPENMP
  const int threads = max_threads();
  if (threads > 1 && count > 1 && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
      fn(ctx, static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = 0; i < count; ++i) fn(ctx, i);
}

}  // namespace detail
}  // namespace fful
