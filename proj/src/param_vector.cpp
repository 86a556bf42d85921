#include "fful/param_vector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fful/parallel.hpp"

namespace fful {
namespace {

// Elementwise ops only pay off in parallel for quite large vectors; below this
// the OpenMP region overhead dominates.
constexpr std::size_t kElementChunk = 65536;

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

ParamVector::ParamVector(std::size_t dim, double value) : values_(dim, value) {}

ParamVector::ParamVector(std::vector<double> values) : values_(std::move(values)) {
  check_finite("ParamVector");
}

void ParamVector::check_finite(const char* what) const {
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(what) + ": non-finite entry");
    }
  }
}

ParamVector vec_add(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "vec_add");
  ParamVector out(a.dim());
  parallel_chunks(a.dim(), kElementChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] + b[i];
  });
  out.check_finite("vec_add");
  return out;
}

ParamVector vec_sub(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "vec_sub");
  ParamVector out(a.dim());
  parallel_chunks(a.dim(), kElementChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] - b[i];
  });
  out.check_finite("vec_sub");
  return out;
}

ParamVector vec_scale(const ParamVector& a, double c) {
  if (!std::isfinite(c)) throw std::invalid_argument("vec_scale: non-finite scalar");
  ParamVector out(a.dim());
  parallel_chunks(a.dim(), kElementChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) out[i] = a[i] * c;
  });
  out.check_finite("vec_scale");
  return out;
}

void vec_add_inplace(ParamVector& y, const ParamVector& x) {
  require_same_dim(y, x, "vec_add_inplace");
  parallel_chunks(y.dim(), kElementChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y[i] += x[i];
  });
  y.check_finite("vec_add_inplace");
}

void vec_axpy_inplace(ParamVector& y, double a, const ParamVector& x) {
  if (!std::isfinite(a)) throw std::invalid_argument("vec_axpy_inplace: non-finite scalar");
  require_same_dim(y, x, "vec_axpy_inplace");
  parallel_chunks(y.dim(), kElementChunk, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y[i] += a * x[i];
  });
  y.check_finite("vec_axpy_inplace");
}

double vec_dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "vec_dot");
  return blocked_sum(a.dim(), [&](std::size_t i) { return a[i] * b[i]; });
}

double vec_norm(const ParamVector& a) {
  return std::sqrt(blocked_sum(a.dim(), [&](std::size_t i) { return a[i] * a[i]; }));
}

}  // namespace fful
