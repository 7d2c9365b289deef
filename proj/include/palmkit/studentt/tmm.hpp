#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "palmkit/linalg/block_vec.hpp"
#include "palmkit/linalg/dense.hpp"
#include "palmkit/problem/finite_sum.hpp"

namespace palmkit {

struct Dataset {
  std::int64_t n = 0;
  std::int64_t d = 0;
  Tensor points;  // n x d, row i = sample i
};

// Unconstrained mixture parameters.  The constrained quantities are reached
// through fixed surjections:
//   weights  = softmax(alpha_raw)                  (simplex)
//   nu       = nu_raw^2 + eps                      (>= eps)
//   scatter  = sigma_raw^T sigma_raw + eps I       (>= eps I)
// sigma_raw is kept symmetric; gradients are reported in that subspace.
struct TmmParams {
  std::int64_t K = 0;
  std::int64_t d = 0;
  double eps = 1e-3;
  Tensor alpha_raw;               // [K]
  Tensor nu_raw;                  // [K]
  Tensor mu;                      // d x K, column k = component center
  std::vector<Tensor> sigma_raw;  // K symmetric d x d matrices
};

struct ConstrainedParams {
  std::int64_t K = 0;
  std::int64_t d = 0;
  Tensor alpha;                   // simplex weights [K]
  Tensor nu;                      // [K]
  Tensor mu;                      // d x K
  std::vector<Tensor> sigma;      // K SPD scatter matrices
  std::vector<SpdFactor> factor;  // Cholesky factors of sigma
};

// Maps raw parameters to constrained ones (softmax with max subtraction,
// squares plus the eps floors) and Cholesky-factors every scatter matrix.
ConstrainedParams apply_trafo(const TmmParams& params);

// log density of the multivariate Student-t distribution, computed in
// log-space: lgamma((d+nu)/2) - lgamma(nu/2) - (d/2) log(nu pi)
//            - log|Sigma|/2 - ((d+nu)/2) log1p(s/nu),
// with s = (x-mu)^T Sigma^{-1} (x-mu) via the Cholesky factor.
double student_t_logpdf(const double* x, std::int64_t d, double nu,
                        const double* mu, const SpdFactor& sigma);
double student_t_logpdf(const Tensor& x, double nu, const Tensor& mu,
                        const SpdFactor& sigma);

// Mixture negative log-likelihood -(1/n) sum_i log sum_k alpha_k f(x_i|k),
// with the inner sum done by log-sum-exp.  Throws NumericalError when the
// result is not finite.
double mm_nll(const TmmParams& params, const Dataset& data);

enum class TmmBlock { alpha = 0, nu = 1, mu = 2, sigma = 3 };

// Gradient of mm_nll with respect to one raw block.  Shapes: alpha [K],
// nu [K], mu d x K, sigma K x d x d (each slice symmetric).
Tensor mm_nll_grad(const TmmParams& params, const Dataset& data,
                   TmmBlock block);

// Block layout used by the solver: alpha [K], nu [K], mu [d,K],
// sigma [K,d,d] (symmetric slices).
BlockVec tmm_to_blockvec(const TmmParams& params);
TmmParams tmm_from_blockvec(const BlockVec& x, double eps);

namespace detail {
// content-keyed evaluation caches (defined in the implementation file)
struct TmmCaches;
}  // namespace detail

// Finite-sum adapter around a dataset.  Evaluations cache the per-(sample,
// component) Mahalanobis solves keyed on the exact bytes of (batch, mu,
// sigma), so re-evaluations that only move alpha or nu (the common case for
// curvature probes) skip all triangular solves.  The cache makes concurrent
// evaluation on one instance unsafe; results are unaffected by hits.
class TmmProblem final : public FiniteSumProblem {
 public:
  TmmProblem(Dataset data, std::int64_t K, double eps = 1e-3);
  ~TmmProblem() override;

  std::int64_t sample_count() const override { return data_.n; }
  const std::vector<BlockSpec>& block_specs() const override { return specs_; }

  double eval_batch(const BlockVec& point,
                    std::span<const std::int64_t> batch) const override;
  Tensor grad_block_batch(const BlockVec& point, std::size_t block,
                          std::span<const std::int64_t> batch) const override;
  BlockVec grad_all_batch(const BlockVec& point,
                          std::span<const std::int64_t> batch) const override;
  double eval_with_grad_all(const BlockVec& point,
                            std::span<const std::int64_t> batch,
                            BlockVec& grad_out) const override;

  const Dataset& data() const { return data_; }
  std::int64_t components() const { return K_; }
  double eps() const { return eps_; }

 private:
  Dataset data_;
  std::int64_t K_;
  double eps_;
  std::vector<BlockSpec> specs_;
  mutable std::unique_ptr<detail::TmmCaches> caches_;
};

}  // namespace palmkit
