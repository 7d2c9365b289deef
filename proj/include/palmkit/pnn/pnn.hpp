#pragma once

#include <cstdint>
#include <vector>

#include "palmkit/linalg/block_vec.hpp"
#include "palmkit/linalg/dense.hpp"
#include "palmkit/linalg/tensor.hpp"
#include "palmkit/optim/prox.hpp"
#include "palmkit/problem/finite_sum.hpp"

namespace palmkit {

inline constexpr std::int64_t kPnnClasses = 10;
inline constexpr double kPnnBox = 10.0;

// Feed-forward network whose hidden layers keep the state in R^d:
//
//   a_0 = x,   a_i = T_i elu(T_i^T a_{i-1} + b_i)   (i = 1..3)
//   output = sigmoid(T_4 a_3 + b_4)
//
// T_1..T_3 are d x n_i with orthonormal columns (n_i <= d), which makes the
// three-layer core 1-Lipschitz; T_4 is classes x d with entries confined to
// [-kPnnBox, kPnnBox].  Biases are unconstrained.
struct PnnWeights {
  std::int64_t d = 0;
  std::vector<std::int64_t> widths;  // n_1, n_2, n_3
  std::vector<Tensor> T;             // T[0..2]: d x n_i, T[3]: classes x d
  std::vector<Tensor> b;             // b[0..2]: n_i, b[3]: classes

  // all-zero weights with the given shape
  static PnnWeights zeros(std::int64_t d, std::vector<std::int64_t> widths);
};

struct LabeledBatch {
  Tensor inputs;   // m x d
  Tensor targets;  // m x classes, one-hot rows
};

double elu(double x);
double elu_prime(double x);

// Three-layer core only (no head): d-vector in, d-vector out.
Tensor pnn_core(const PnnWeights& u, const Tensor& x);
// Full network: d-vector in, probability vector in (0,1)^classes out.
Tensor pnn_forward(const PnnWeights& u, const Tensor& x);

// Mean squared error (1/m) sum_i |forward(x_i) - y_i|^2 over the batch rows
// given by `batch` (indices into data).  When `grad` is non-null it receives
// the exact gradient, accumulated by reverse mode through the layer
// structure; both occurrences of each T_i (inside and outside the
// nonlinearity) contribute.
double pnn_loss_grad(const PnnWeights& u, const LabeledBatch& data,
                     std::span<const std::int64_t> batch,
                     PnnWeights* grad = nullptr);

// Projection onto matrices with orthonormal columns (the polar factor of A)
// by the Newton iteration Y <- 2 Y (I + Y^T Y)^{-1}, stopped when
// |Y^T Y - I|_F <= tol.  Requires cols <= rows and smallest singular value
// >= 1e-8 (checked via the spectrum of A^T A); throws
// SingularProjectionError otherwise.
Tensor stiefel_project(const Tensor& a, double tol = 1e-12,
                       int max_iter = 100);

// Projection onto the feasible set: T_1..T_3 onto orthonormal columns, T_4
// clipped to the box, biases untouched.  Independent of tau (indicator
// function prox).  A singular T_i is perturbed by 1e-6 Gaussian noise and
// reprojected once before the error propagates.
PnnWeights pnn_prox(const PnnWeights& u, double tau);

// Solver block layout: T_1, T_2, T_3, T_4, b_1, b_2, b_3, b_4.
BlockVec pnn_to_blockvec(const PnnWeights& u);
PnnWeights pnn_from_blockvec(const BlockVec& x);
// Matching per-block proximal operators (projection / clip / identity).
std::vector<ProxOp> pnn_prox_ops();

// Finite-sum adapter over labeled samples.
class PnnProblem final : public FiniteSumProblem {
 public:
  PnnProblem(LabeledBatch data, std::int64_t d,
             std::vector<std::int64_t> widths);

  std::int64_t sample_count() const override { return data_.inputs.rows(); }
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

  const LabeledBatch& data() const { return data_; }

 private:
  LabeledBatch data_;
  std::int64_t d_;
  std::vector<std::int64_t> widths_;
  std::vector<BlockSpec> specs_;
};

// Fraction of rows whose argmax output matches the argmax target.
double pnn_accuracy(const PnnWeights& u, const LabeledBatch& data);

}  // namespace palmkit
