#include "palmkit/linalg/tensor.hpp"

#include <algorithm>

#include "palmkit/errors.hpp"

namespace palmkit {

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  std::int64_t n = 1;
  for (std::int64_t s : shape_) {
    if (s < 0) throw ShapeError("tensor dimensions must be nonnegative");
    n *= s;
  }
  data_.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor Tensor::identity(std::int64_t n) {
  Tensor t({n, n});
  for (std::int64_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::int64_t Tensor::rows() const {
  if (shape_.size() != 2) throw ShapeError("rows() requires a rank-2 tensor");
  return shape_[0];
}

std::int64_t Tensor::cols() const {
  if (shape_.size() != 2) throw ShapeError("cols() requires a rank-2 tensor");
  return shape_[1];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace palmkit
