#pragma once

#include <optional>

#include "palmkit/problem/finite_sum.hpp"
#include "palmkit/rng/philox.hpp"

namespace palmkit {

// Exact block gradient over all samples.
Tensor full_gradient(const FiniteSumProblem& problem, const BlockVec& point,
                     std::size_t block);

// Uniform size-b subset of {0..n-1} without replacement (Floyd's algorithm),
// returned in ascending order; b = n yields the full index set.  Consumes
// exactly b draws from the stream.
std::vector<std::int64_t> draw_minibatch(Rng& stream, std::int64_t n,
                                         std::int64_t b);

// Plain minibatch gradient (unbiased for the full gradient).
Tensor sgd_estimate(const FiniteSumProblem& problem, const BlockVec& point,
                    std::size_t block, std::span<const std::int64_t> batch);

// True with probability 1/p; requires p > 1.
bool bernoulli_refresh(Rng& stream, double p);

// Recursive variance-reduced estimator state for one block.  prev_point is
// the full point at which prev_estimate was taken (all blocks are needed to
// re-evaluate per-sample gradients there).
struct SarahState {
  Tensor prev_estimate;
  BlockVec prev_point;
  std::int64_t step = 0;
};

// One estimator update for `block` evaluated at `point`:
//   step 0 or refresh:  full gradient at `point`
//   otherwise:          minibatch gradient difference between `point` and
//                       prev_point, plus prev_estimate
// The caller draws `batch` and decides `refresh` (forced epoch starts, the
// Bernoulli(1/p) event) so that the same batch can also feed the step-size
// probe.  `base_grad`, when given, must equal the minibatch gradient at
// `point` and is reused instead of recomputing it.
Tensor sarah_step(SarahState& state, const FiniteSumProblem& problem,
                  std::size_t block, const BlockVec& point,
                  std::span<const std::int64_t> batch, bool refresh,
                  const Tensor* base_grad = nullptr);

}  // namespace palmkit
