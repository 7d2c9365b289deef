#include "palmkit/linalg/block_vec.hpp"

#include "palmkit/errors.hpp"
#include "palmkit/simd/kernels.hpp"

namespace palmkit {

namespace {

void check_tensor_pair(const Tensor& x, const Tensor& y, const char* op) {
  if (!x.same_shape(y))
    throw ShapeError(std::string(op) + ": tensor shape mismatch");
}

}  // namespace

void BlockVec::add_block(std::string name, Tensor value) {
  for (const Block& b : blocks_) {
    if (b.name == name)
      throw ShapeError("duplicate block name '" + name + "'");
  }
  blocks_.push_back(Block{std::move(name), std::move(value)});
}

std::size_t BlockVec::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j].name == name) return j;
  }
  throw ShapeError("no block named '" + name + "'");
}

const Tensor& BlockVec::operator[](const std::string& name) const {
  return blocks_[index_of(name)].value;
}

Tensor& BlockVec::operator[](const std::string& name) {
  return blocks_[index_of(name)].value;
}

std::int64_t BlockVec::total_size() const {
  std::int64_t n = 0;
  for (const Block& b : blocks_) n += b.value.size();
  return n;
}

void BlockVec::check_same_structure(const BlockVec& other) const {
  if (blocks_.size() != other.blocks_.size())
    throw ShapeError("block count mismatch");
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    if (blocks_[j].name != other.blocks_[j].name)
      throw ShapeError("block name mismatch at position " + std::to_string(j));
    if (!blocks_[j].value.same_shape(other.blocks_[j].value))
      throw ShapeError("block shape mismatch for '" + blocks_[j].name + "'");
  }
}

Tensor add(const Tensor& x, const Tensor& y) {
  check_tensor_pair(x, y, "add");
  Tensor out(x.shape());
  simd::add(out.data(), x.data(), y.data(), x.size());
  return out;
}

Tensor sub(const Tensor& x, const Tensor& y) {
  check_tensor_pair(x, y, "sub");
  Tensor out(x.shape());
  simd::sub(out.data(), x.data(), y.data(), x.size());
  return out;
}

Tensor scale(const Tensor& x, double s) {
  Tensor out(x.shape());
  simd::scale(out.data(), x.data(), s, x.size());
  return out;
}

void axpy_inplace(Tensor& y, double s, const Tensor& x) {
  check_tensor_pair(y, x, "axpy");
  simd::axpy(y.data(), s, x.data(), x.size());
}

Tensor extrapolate(const Tensor& x, const Tensor& xprev, double c) {
  check_tensor_pair(x, xprev, "extrapolate");
  Tensor out(x.shape());
  simd::extrapolate(out.data(), x.data(), xprev.data(), c, x.size());
  return out;
}

double dot(const Tensor& x, const Tensor& y) {
  check_tensor_pair(x, y, "dot");
  return simd::dot(x.data(), y.data(), x.size());
}

double squared_norm(const Tensor& x) { return simd::sumsq(x.data(), x.size()); }

BlockVec add(const BlockVec& x, const BlockVec& y) {
  x.check_same_structure(y);
  BlockVec out;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    out.add_block(x.block(j).name, add(x.value(j), y.value(j)));
  return out;
}

BlockVec sub(const BlockVec& x, const BlockVec& y) {
  x.check_same_structure(y);
  BlockVec out;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    out.add_block(x.block(j).name, sub(x.value(j), y.value(j)));
  return out;
}

BlockVec scale(const BlockVec& x, double s) {
  BlockVec out;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    out.add_block(x.block(j).name, scale(x.value(j), s));
  return out;
}

void axpy_inplace(BlockVec& y, double s, const BlockVec& x) {
  y.check_same_structure(x);
  for (std::size_t j = 0; j < x.block_count(); ++j)
    axpy_inplace(y.value(j), s, x.value(j));
}

BlockVec extrapolate(const BlockVec& x, const BlockVec& xprev, double c) {
  x.check_same_structure(xprev);
  BlockVec out;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    out.add_block(x.block(j).name, extrapolate(x.value(j), xprev.value(j), c));
  return out;
}

double dot(const BlockVec& x, const BlockVec& y) {
  x.check_same_structure(y);
  double acc = 0.0;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    acc += dot(x.value(j), y.value(j));
  return acc;
}

double squared_norm(const BlockVec& x) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.block_count(); ++j)
    acc += squared_norm(x.value(j));
  return acc;
}

}  // namespace palmkit
