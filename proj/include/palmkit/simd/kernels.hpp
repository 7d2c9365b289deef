#pragma once

#include <cstddef>

// Elementwise vector kernels and reductions with a scalar reference path and
// an AVX2 path selected at runtime.  Both paths are bit-identical:
//
//  * elementwise kernels round each element independently (no FMA: the whole
//    project builds with -ffp-contract=off and the AVX2 path uses separate
//    mul/add intrinsics),
//  * reductions use a fixed documented order: four partial sums, lane j
//    accumulating elements with index == j (mod 4) in increasing index order
//    (tail included), combined as (acc0 + acc1) + (acc2 + acc3).
//
// The dispatcher picks AVX2 when the CPU supports it; the environment
// variable PALMKIT_SIMD=scalar (or =avx2) overrides, and tests can force a
// path via force_isa().

namespace palmkit::simd {

enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);  // throws ConfigError if unsupported on this CPU
bool cpu_has_avx2();

// dst = a + b
void add(double* dst, const double* a, const double* b, std::size_t n);
// dst = a - b
void sub(double* dst, const double* a, const double* b, std::size_t n);
// dst = s * a
void scale(double* dst, const double* a, double s, std::size_t n);
// dst += s * x
void axpy(double* dst, double s, const double* x, std::size_t n);
// dst = x + c * (x - xprev)
void extrapolate(double* dst, const double* x, const double* xprev, double c,
                 std::size_t n);

double dot(const double* a, const double* b, std::size_t n);
double sumsq(const double* a, std::size_t n);

// dst = exp(a), elementwise.  Cody-Waite reduction plus a degree-13
// polynomial, accurate to ~1 ulp over the normal range; results in the deep
// subnormal range may differ from a correctly rounded exp by one ulp and
// inputs at or below -746 flush to zero.  +/-inf behave as limits and NaN
// propagates.  In-place use (dst == a) is fine.
void vexp(double* dst, const double* a, std::size_t n);

// dst = log1p(a), elementwise, for a >= 0 (callers feed nonnegative ratios;
// +inf and NaN propagate).  fdlibm-style exponent/mantissa split with an
// exact two-sum correction for the 1 + a rounding, accurate to ~1 ulp even
// for tiny a.  In-place use is fine.
void vlog1p(double* dst, const double* a, std::size_t n);

// Small batched triangular solves, four right-hand sides at a time, for the
// mixture engine.  Columns are interleaved: element r of column j sits at
// buf[4*r + j].  L is row-major lower-triangular (d x d) and inv_diag[r]
// must hold 1 / L(r, r); diagonal divisions are performed as multiplications
// by inv_diag, matching the scalar engine.
//   solve4_fwd: solve L w = rhs per column and write |w_j|^2 into s4[j].
//   solve4_bwd: solve L^T z = w per column (reads L by columns).
void solve4_fwd(const double* L, const double* inv_diag, std::size_t d,
                const double* rhsT, double* wT, double* s4);
void solve4_bwd(const double* L, const double* inv_diag, std::size_t d,
                const double* wT, double* zT);

// y = A x with A row-major (rows x cols); each row uses the dot kernel.
void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y);
// y = A^T x, accumulated row by row with the axpy kernel (y must hold cols).
void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y);

}  // namespace palmkit::simd
