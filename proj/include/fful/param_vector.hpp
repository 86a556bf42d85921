#pragma once

#include <cstddef>
#include <vector>

namespace fful {

// Flat model-parameter vector. Arithmetic is done in double; every operation
// checks that its result stays finite.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double value = 0.0);
  explicit ParamVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool operator==(const ParamVector& other) const { return values_ == other.values_; }

  // Throws std::runtime_error naming `what` if any entry is NaN or infinite.
  void check_finite(const char* what) const;

 private:
  std::vector<double> values_;
};

ParamVector vec_add(const ParamVector& a, const ParamVector& b);
ParamVector vec_sub(const ParamVector& a, const ParamVector& b);
ParamVector vec_scale(const ParamVector& a, double c);
void vec_add_inplace(ParamVector& y, const ParamVector& x);
// y += a * x
void vec_axpy_inplace(ParamVector& y, double a, const ParamVector& x);
double vec_dot(const ParamVector& a, const ParamVector& b);
double vec_norm(const ParamVector& a);

}  // namespace fful
