#include "palmkit/linalg/dense.hpp"

#include <cmath>
#include <cstring>

#include "palmkit/errors.hpp"
#include "palmkit/simd/kernels.hpp"

namespace palmkit {

namespace {

void require_square(const Tensor& a, const char* who) {
  if (a.rank() != 2 || a.rows() != a.cols())
    throw ShapeError(std::string(who) + ": square matrix required");
}

double off_diag_frobenius_sq(const Tensor& b) {
  const std::int64_t n = b.rows();
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < n; ++j)
      if (i != j) s += b(i, j) * b(i, j);
  return s;
}

}  // namespace

SpdFactor cholesky_spd(const Tensor& a) {
  require_square(a, "cholesky_spd");
  const std::int64_t n = a.rows();
  SpdFactor f;
  f.dim = n;
  f.lower = Tensor::matrix(n, n);
  Tensor& l = f.lower;
  double log_det = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    double d = a(j, j) - simd::dot(l.data() + j * n, l.data() + j * n, j);
    if (!(d > 0.0) || !std::isfinite(d))
      throw NotPositiveDefiniteError("matrix not positive definite", j);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    log_det += 2.0 * std::log(ljj);
    for (std::int64_t i = j + 1; i < n; ++i) {
      double s = a(i, j) - simd::dot(l.data() + i * n, l.data() + j * n, j);
      l(i, j) = s / ljj;
    }
  }
  f.log_det = log_det;
  return f;
}

void solve_lower_inplace(const SpdFactor& f, double* b) {
  const std::int64_t n = f.dim;
  const Tensor& l = f.lower;
  for (std::int64_t i = 0; i < n; ++i) {
    double s = b[i] - simd::dot(l.data() + i * n, b, i);
    b[i] = s / l(i, i);
  }
}

void solve_lower_t_inplace(const SpdFactor& f, double* b) {
  const std::int64_t n = f.dim;
  const Tensor& l = f.lower;
  for (std::int64_t i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (std::int64_t k = i + 1; k < n; ++k) s -= l(k, i) * b[k];
    b[i] = s / l(i, i);
  }
}

Tensor solve_spd(const SpdFactor& f, const Tensor& b) {
  if (b.rank() != 1 || b.size() != f.dim)
    throw ShapeError("solve_spd: right-hand side length mismatch");
  Tensor x = b;
  solve_lower_inplace(f, x.data());
  solve_lower_t_inplace(f, x.data());
  return x;
}

SymEigen sym_eigen(const Tensor& a) {
  require_square(a, "sym_eigen");
  const std::int64_t n = a.rows();
  Tensor b = a;
  Tensor v = Tensor::identity(n);
  const double scale = std::max(1.0, frobenius_norm(a));
  const double tol = 1e-12 * scale;

  int sweep = 0;
  while (std::sqrt(off_diag_frobenius_sq(b)) > tol) {
    if (++sweep > 100)
      throw NumericalError("sym_eigen: no convergence within 100 sweeps");
    for (std::int64_t p = 0; p < n - 1; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) {
        const double bpq = b(p, q);
        if (bpq == 0.0) continue;
        const double theta = (b(q, q) - b(p, p)) / (2.0 * bpq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::int64_t k = 0; k < n; ++k) {
          const double bkp = b(k, p), bkq = b(k, q);
          b(k, p) = c * bkp - s * bkq;
          b(k, q) = s * bkp + c * bkq;
        }
        for (std::int64_t k = 0; k < n; ++k) {
          const double bpk = b(p, k), bqk = b(q, k);
          b(p, k) = c * bpk - s * bqk;
          b(q, k) = s * bpk + c * bqk;
        }
        for (std::int64_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // sort descending, carrying eigenvector columns along
  std::vector<std::int64_t> order(n);
  for (std::int64_t i = 0; i < n; ++i) order[i] = i;
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = i + 1; j < n; ++j)
      if (b(order[j], order[j]) > b(order[i], order[i]))
        std::swap(order[i], order[j]);

  SymEigen out;
  out.values = Tensor::vector(n);
  out.vectors = Tensor::matrix(n, n);
  for (std::int64_t j = 0; j < n; ++j) {
    out.values[j] = b(order[j], order[j]);
    for (std::int64_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

Tensor sym_sqrt_psd(const Tensor& a) {
  SymEigen e = sym_eigen(a);
  const std::int64_t n = a.rows();
  Tensor out = Tensor::matrix(n, n);
  for (std::int64_t j = 0; j < n; ++j) {
    const double r = std::sqrt(std::max(0.0, e.values[j]));
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t k = 0; k < n; ++k)
        out(i, k) += r * e.vectors(i, j) * e.vectors(k, j);
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: rank-2 tensor required");
  Tensor out = Tensor::matrix(a.cols(), a.rows());
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions mismatch");
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t k = 0; k < a.cols(); ++k)
      simd::axpy(out.data() + i * b.cols(), a(i, k), b.data() + k * b.cols(),
                 b.cols());
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows())
    throw ShapeError("matmul_tn: inner dimensions mismatch");
  Tensor out = Tensor::matrix(a.cols(), b.cols());
  for (std::int64_t k = 0; k < a.rows(); ++k)
    for (std::int64_t i = 0; i < a.cols(); ++i)
      simd::axpy(out.data() + i * b.cols(), a(k, i), b.data() + k * b.cols(),
                 b.cols());
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
    throw ShapeError("matmul_nt: inner dimensions mismatch");
  Tensor out = Tensor::matrix(a.rows(), b.rows());
  for (std::int64_t i = 0; i < a.rows(); ++i)
    for (std::int64_t j = 0; j < b.rows(); ++j)
      out(i, j) = simd::dot(a.data() + i * a.cols(), b.data() + j * b.cols(),
                            a.cols());
  return out;
}

double frobenius_norm(const Tensor& a) {
  return std::sqrt(simd::sumsq(a.data(), a.size()));
}

}  // namespace palmkit
