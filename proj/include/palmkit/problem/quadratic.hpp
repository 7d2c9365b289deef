#pragma once

#include "palmkit/problem/finite_sum.hpp"
#include "palmkit/rng/philox.hpp"

namespace palmkit {

// Separable finite sum of diagonal quadratics:
//   h_i(x) = sum_j 1/2 (x_j - c_{ij})^T diag(d_{ij}) (x_j - c_{ij})
// with d_{ij} > 0.  The minimizer and minimum of the mean are closed-form,
// which makes this the oracle problem for solver and estimator tests.
class QuadraticFiniteSum : public FiniteSumProblem {
 public:
  // Blocks named q0, q1, ... with the given sizes; curvatures are drawn
  // uniformly from [0.5, 2.5] and centers from spread * N(0,1).
  QuadraticFiniteSum(std::int64_t n, const std::vector<std::int64_t>& sizes,
                     std::uint64_t seed, double spread = 1.0);

  std::int64_t sample_count() const override { return n_; }
  const std::vector<BlockSpec>& block_specs() const override { return specs_; }
  double eval_batch(const BlockVec& point,
                    std::span<const std::int64_t> batch) const override;
  Tensor grad_block_batch(const BlockVec& point, std::size_t block,
                          std::span<const std::int64_t> batch) const override;

  // argmin of the full mean objective and its value
  BlockVec minimizer() const;
  double min_value() const;
  // exact Lipschitz constant of grad_j of the full mean (max mean curvature)
  double block_lipschitz(std::size_t block) const;

  // direct access for enumeration-style tests
  double curvature(std::int64_t i, std::size_t block, std::int64_t k) const;
  double center(std::int64_t i, std::size_t block, std::int64_t k) const;

 private:
  std::int64_t n_;
  std::vector<BlockSpec> specs_;
  // per block: n x size matrices of curvatures and centers
  std::vector<Tensor> curv_, cent_;
};

}  // namespace palmkit
