#pragma once

#include <span>
#include <string>
#include <vector>

#include "palmkit/linalg/block_vec.hpp"

namespace palmkit {

// Shape and constraints of one optimization block.  `symmetric` marks square
// matrix blocks that live in the symmetric subspace: gradients are reported
// as symmetric matrices and finite-difference checks must probe symmetric
// directions.
struct BlockSpec {
  std::string name;
  std::vector<std::int64_t> shape;
  bool symmetric = false;
};

// A finite-sum objective H(x) = (1/n) sum_i h_i(x) over named blocks.
// Batch evaluations reduce over the given index list in order (mean), so a
// sorted batch gives a reproducible reduction.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::int64_t sample_count() const = 0;
  virtual const std::vector<BlockSpec>& block_specs() const = 0;

  // (1/|batch|) sum_{i in batch} h_i(point)
  virtual double eval_batch(const BlockVec& point,
                            std::span<const std::int64_t> batch) const = 0;

  // (1/|batch|) sum_{i in batch} grad_{block} h_i(point)
  virtual Tensor grad_block_batch(const BlockVec& point, std::size_t block,
                                  std::span<const std::int64_t> batch)
      const = 0;

  // All block gradients at once; problems override this when a fused pass is
  // cheaper than block-by-block evaluation.
  virtual BlockVec grad_all_batch(const BlockVec& point,
                                  std::span<const std::int64_t> batch) const;

  // Objective and all block gradients in one pass (used by trace recording);
  // the default chains eval_batch and grad_all_batch.
  virtual double eval_with_grad_all(const BlockVec& point,
                                    std::span<const std::int64_t> batch,
                                    BlockVec& grad_out) const;

  // Zero point with this problem's block structure.
  BlockVec make_point() const;
};

// {0, 1, ..., n-1}
std::vector<std::int64_t> all_indices(std::int64_t n);

}  // namespace palmkit
