#include "palmkit/estimators/estimators.hpp"

#include <algorithm>
#include <unordered_set>

#include "palmkit/errors.hpp"
#include "palmkit/simd/kernels.hpp"

namespace palmkit {

Tensor full_gradient(const FiniteSumProblem& problem, const BlockVec& point,
                     std::size_t block) {
  const std::vector<std::int64_t> idx = all_indices(problem.sample_count());
  return problem.grad_block_batch(point, block, idx);
}

std::vector<std::int64_t> draw_minibatch(Rng& stream, std::int64_t n,
                                         std::int64_t b) {
  if (b < 1 || b > n)
    throw ConfigError("draw_minibatch: need 1 <= b <= n, got b=" +
                      std::to_string(b) + ", n=" + std::to_string(n));
  std::unordered_set<std::int64_t> seen;
  seen.reserve(static_cast<std::size_t>(b) * 2);
  for (std::int64_t j = n - b; j < n; ++j) {
    const std::int64_t t = stream.uniform_int(j + 1);
    if (!seen.insert(t).second) seen.insert(j);
  }
  std::vector<std::int64_t> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

Tensor sgd_estimate(const FiniteSumProblem& problem, const BlockVec& point,
                    std::size_t block, std::span<const std::int64_t> batch) {
  return problem.grad_block_batch(point, block, batch);
}

bool bernoulli_refresh(Rng& stream, double p) {
  if (!(p > 1.0)) throw ConfigError("bernoulli_refresh: p must exceed 1");
  return stream.uniform() < 1.0 / p;
}

Tensor sarah_step(SarahState& state, const FiniteSumProblem& problem,
                  std::size_t block, const BlockVec& point,
                  std::span<const std::int64_t> batch, bool refresh,
                  const Tensor* base_grad) {
  // With b = n the recursive branch telescopes to the full gradient exactly,
  // so take the direct branch and avoid the one-ulp drift of (g - g') + g'.
  const bool full_batch =
      batch.size() == static_cast<std::size_t>(problem.sample_count());
  Tensor estimate;
  if (state.step == 0 || refresh || full_batch) {
    estimate = full_batch && base_grad ? *base_grad
                                       : full_gradient(problem, point, block);
  } else {
    Tensor cur = base_grad ? *base_grad
                           : problem.grad_block_batch(point, block, batch);
    Tensor prev = problem.grad_block_batch(state.prev_point, block, batch);
    // cur - prev + prev_estimate
    estimate = Tensor(cur.shape());
    simd::sub(estimate.data(), cur.data(), prev.data(), cur.size());
    simd::add(estimate.data(), estimate.data(), state.prev_estimate.data(),
              cur.size());
  }
  state.prev_estimate = estimate;
  state.prev_point = point;
  ++state.step;
  return estimate;
}

}  // namespace palmkit
