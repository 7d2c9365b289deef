#pragma once

#include "palmkit/linalg/tensor.hpp"

namespace palmkit {

// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
// log_det caches 2 * sum(log diag(L)).
struct SpdFactor {
  std::int64_t dim = 0;
  Tensor lower;  // dim x dim, strictly upper part zero
  double log_det = 0.0;
};

// Throws NotPositiveDefiniteError (with the failing pivot index) when a
// pivot is <= 0 or non-finite.
SpdFactor cholesky_spd(const Tensor& a);

// Solve L y = b in place (forward substitution).
void solve_lower_inplace(const SpdFactor& f, double* b);
// Solve L^T x = b in place (back substitution).
void solve_lower_t_inplace(const SpdFactor& f, double* b);
// x = A^{-1} b via the two triangular solves.
Tensor solve_spd(const SpdFactor& f, const Tensor& b);

// Symmetric eigendecomposition A = P diag(values) P^T by cyclic Jacobi.
// Eigenvalues are returned in descending order, eigenvectors as the columns
// of P.  Convergence: off-diagonal Frobenius norm <= 1e-12 * max(1, |A|_F),
// hard cap of 100 sweeps (NumericalError beyond that).
struct SymEigen {
  Tensor values;   // [n], descending
  Tensor vectors;  // n x n, column j pairs with values[j]
};
SymEigen sym_eigen(const Tensor& a);

// Symmetric square root of a positive semidefinite matrix via sym_eigen;
// eigenvalues below zero are clamped to zero before the root.
Tensor sym_sqrt_psd(const Tensor& a);

// Small dense helpers (row-major).
Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);    // A B
Tensor matmul_tn(const Tensor& a, const Tensor& b); // A^T B
Tensor matmul_nt(const Tensor& a, const Tensor& b); // A B^T
double frobenius_norm(const Tensor& a);

}  // namespace palmkit
