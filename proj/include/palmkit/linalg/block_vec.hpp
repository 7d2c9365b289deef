#pragma once

#include <string>
#include <vector>

#include "palmkit/linalg/tensor.hpp"

// BlockVec: an ordered collection of named dense tensors.  Solvers treat a
// point in the product space as one BlockVec; all arithmetic checks that
// both operands carry the same block names and shapes in the same order and
// throws ShapeError otherwise.

namespace palmkit {

struct Block {
  std::string name;
  Tensor value;
};

class BlockVec {
 public:
  BlockVec() = default;

  void add_block(std::string name, Tensor value);

  std::size_t block_count() const { return blocks_.size(); }
  const Block& block(std::size_t j) const { return blocks_[j]; }
  Block& block(std::size_t j) { return blocks_[j]; }
  const Tensor& value(std::size_t j) const { return blocks_[j].value; }
  Tensor& value(std::size_t j) { return blocks_[j].value; }

  // Index of a named block; throws ShapeError if absent.
  std::size_t index_of(const std::string& name) const;
  const Tensor& operator[](const std::string& name) const;
  Tensor& operator[](const std::string& name);

  std::int64_t total_size() const;
  void check_same_structure(const BlockVec& other) const;

 private:
  std::vector<Block> blocks_;
};

// x + y, x - y
BlockVec add(const BlockVec& x, const BlockVec& y);
BlockVec sub(const BlockVec& x, const BlockVec& y);
// s * x
BlockVec scale(const BlockVec& x, double s);
// y += s * x
void axpy_inplace(BlockVec& y, double s, const BlockVec& x);
// x + c * (x - xprev)
BlockVec extrapolate(const BlockVec& x, const BlockVec& xprev, double c);
double dot(const BlockVec& x, const BlockVec& y);
double squared_norm(const BlockVec& x);

// Same helpers on single tensors.
Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, double s);
void axpy_inplace(Tensor& y, double s, const Tensor& x);
Tensor extrapolate(const Tensor& x, const Tensor& xprev, double c);
double dot(const Tensor& x, const Tensor& y);
double squared_norm(const Tensor& x);

}  // namespace palmkit
