#include <doctest.h>

#include <atomic>
#include <numeric>
#include <vector>

#include "fful/parallel.hpp"

using namespace fful;

TEST_CASE("parallel_for visits every index exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
  CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
}

TEST_CASE("parallel_chunks covers the range with fixed boundaries") {
  std::vector<int> hits(10000, 0);
  parallel_chunks(hits.size(), 1024, [&](std::size_t lo, std::size_t hi) {
    CHECK(lo % 1024 == 0);
    for (std::size_t i = lo; i < hi; ++i) hits[i] += 1;
  });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 10000);
}

TEST_CASE("blocked_sum is independent of the thread count") {
  std::vector<double> values(100001);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 1.0 / (1.0 + static_cast<double>(i));
  const int saved = max_threads();
  set_max_threads(1);
  const double s1 = blocked_sum(values.size(), [&](std::size_t i) { return values[i]; });
  set_max_threads(2);
  const double s2 = blocked_sum(values.size(), [&](std::size_t i) { return values[i]; });
  set_max_threads(saved);
  CHECK(s1 == s2);
  double plain = 0.0;
  for (double v : values) plain += v;
  CHECK(s1 == doctest::Approx(plain).epsilon(1e-12));
}

TEST_CASE("set_max_threads clamps to at least one") {
  const int saved = max_threads();
  set_max_threads(-3);
  CHECK(max_threads() == 1);
  set_max_threads(saved);
}
