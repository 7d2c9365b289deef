#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace palmkit {

// Dense row-major tensor of doubles.  Rank 1 and 2 cover everything in this
// project; the shape is kept general so block specs stay uniform.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::initializer_list<std::int64_t> shape)
      : Tensor(std::vector<std::int64_t>(shape)) {}

  static Tensor vector(std::int64_t n) { return Tensor({n}); }
  static Tensor matrix(std::int64_t rows, std::int64_t cols) {
    return Tensor({rows, cols});
  }
  static Tensor identity(std::int64_t n);

  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t rows() const;
  std::int64_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::int64_t i) { return data_[i]; }
  double operator[](std::int64_t i) const { return data_[i]; }
  // 2-D access, row-major
  double& operator()(std::int64_t r, std::int64_t c) {
    return data_[r * shape_[1] + c];
  }
  double operator()(std::int64_t r, std::int64_t c) const {
    return data_[r * shape_[1] + c];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double v);

 private:
  std::vector<std::int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace palmkit
