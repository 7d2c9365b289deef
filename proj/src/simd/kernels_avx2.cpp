// AVX2 kernel variants.  This TU is compiled with -mavx2; the dispatcher in
// kernels.cpp only calls these after a runtime CPU check.  Reductions keep
// the exact lane/order contract of the scalar reference: vector lane j holds
// the partial sum of elements with index == j (mod 4), tails continue into
// the same partials, and the final combine is (acc0 + acc1) + (acc2 + acc3).

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

#include <cstddef>
#include <cstring>

#include "elem_math.hpp"

namespace palmkit::simd::detail {

#if defined(__x86_64__) || defined(__i386__)

void add_avx2(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_avx2(double* dst, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void scale_avx2(double* dst, const double* a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
  }
  for (; i < n; ++i) dst[i] = s * a[i];
}

void axpy_avx2(double* dst, double s, const double* x, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += s * x[i];
}

void extrapolate_avx2(double* dst, const double* x, const double* xprev,
                      double c, std::size_t n) {
  const __m256d vc = _mm256_set1_pd(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d diff = _mm256_sub_pd(vx, _mm256_loadu_pd(xprev + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(vx, _mm256_mul_pd(vc, diff)));
  }
  for (; i < n; ++i) dst[i] = x[i] + c * (x[i] - xprev[i]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    vacc = _mm256_add_pd(vacc, prod);
  }
  alignas(32) double acc[4];
  _mm256_store_pd(acc, vacc);
  for (; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double sumsq_avx2(const double* a, std::size_t n) {
  __m256d vacc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d va = _mm256_loadu_pd(a + i);
    vacc = _mm256_add_pd(vacc, _mm256_mul_pd(va, va));
  }
  alignas(32) double acc[4];
  _mm256_store_pd(acc, vacc);
  for (; i < n; ++i) acc[i & 3] += a[i] * a[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

// 4-lane body of exp_elem (see elem_math.hpp for the algorithm notes).  NaN
// lanes propagate through the arithmetic with their payload, matching the
// scalar early return; the 2^k lane scales stay finite for the NaN-converted
// integer, so the product remains that NaN.
static inline __m256d exp4(__m256d x) {
  __m256d xc = _mm256_max_pd(_mm256_set1_pd(-746.0), x);
  xc = _mm256_min_pd(_mm256_set1_pd(710.0), xc);
  const __m256d kd =
      _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(kInvLn2)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_sub_pd(xc, _mm256_mul_pd(kd, _mm256_set1_pd(kLn2Hi)));
  r = _mm256_sub_pd(r, _mm256_mul_pd(kd, _mm256_set1_pd(kLn2Lo)));
  __m256d p = _mm256_set1_pd(kExpC[13]);
  for (int i = 12; i >= 0; --i)
    p = _mm256_add_pd(_mm256_mul_pd(p, r), _mm256_set1_pd(kExpC[i]));
  const __m128i ki = _mm256_cvtpd_epi32(kd);
  const __m128i k1 = _mm_srai_epi32(ki, 1);
  const __m128i k2 = _mm_sub_epi32(ki, k1);
  const __m128i bias = _mm_set1_epi32(1023);
  const __m256d s1 = _mm256_castsi256_pd(_mm256_slli_epi64(
      _mm256_cvtepi32_epi64(_mm_add_epi32(k1, bias)), 52));
  const __m256d s2 = _mm256_castsi256_pd(_mm256_slli_epi64(
      _mm256_cvtepi32_epi64(_mm_add_epi32(k2, bias)), 52));
  return _mm256_mul_pd(_mm256_mul_pd(p, s1), s2);
}

void vexp_avx2(double* dst, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, exp4(_mm256_loadu_pd(a + i)));
  for (; i < n; ++i) dst[i] = exp_elem(a[i]);
}

// 4-lane body of log1p_elem.  NaN and +inf lanes are masked to zero for the
// pipeline and the original value is blended back at the end.
static inline __m256d log1p4(__m256d x) {
  const __m256d special = _mm256_cmp_pd(
      x, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
      _CMP_NLT_UQ);
  const __m256d xs = _mm256_blendv_pd(x, _mm256_setzero_pd(), special);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d u = _mm256_add_pd(one, xs);
  const __m256d bv = _mm256_sub_pd(u, one);
  const __m256d av = _mm256_sub_pd(u, bv);
  const __m256d c =
      _mm256_add_pd(_mm256_sub_pd(one, av), _mm256_sub_pd(xs, bv));
  const __m256i bits = _mm256_castpd_si256(u);
  const __m256i frac =
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL));
  const __m256i incr = _mm256_and_si256(
      _mm256_cmpgt_epi64(frac, _mm256_set1_epi64x(0x0006A09E667F3BCCLL)),
      _mm256_set1_epi64x(1));
  // Exact (biased exponent + incr) -> double via the 2^52 bit trick, then
  // remove the bias; both subtractions are exact.
  const __m256i biasedk =
      _mm256_add_epi64(_mm256_srli_epi64(bits, 52), incr);
  const __m256d dk = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(
          biasedk, _mm256_set1_epi64x(0x4330000000000000LL))),
      _mm256_set1_pd(4503599627370496.0 + 1023.0));
  const __m256i mexp = _mm256_slli_epi64(
      _mm256_sub_epi64(_mm256_set1_epi64x(1023), incr), 52);
  const __m256d m = _mm256_castsi256_pd(_mm256_or_si256(frac, mexp));
  const __m256d f = _mm256_sub_pd(m, one);
  const __m256d hfsq =
      _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(f, f));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  const __m256d t1 = _mm256_mul_pd(
      w, _mm256_add_pd(_mm256_set1_pd(kLg[1]),
                       _mm256_mul_pd(w, _mm256_add_pd(_mm256_set1_pd(kLg[3]),
                                                      _mm256_mul_pd(
                                                          w, _mm256_set1_pd(
                                                                 kLg[5]))))));
  const __m256d t2 = _mm256_mul_pd(
      z,
      _mm256_add_pd(
          _mm256_set1_pd(kLg[0]),
          _mm256_mul_pd(
              w, _mm256_add_pd(
                     _mm256_set1_pd(kLg[2]),
                     _mm256_mul_pd(
                         w, _mm256_add_pd(_mm256_set1_pd(kLg[4]),
                                          _mm256_mul_pd(
                                              w, _mm256_set1_pd(kLg[6]))))))));
  const __m256d R = _mm256_add_pd(t2, t1);
  const __m256d corr = _mm256_add_pd(
      _mm256_mul_pd(dk, _mm256_set1_pd(kLn2Lo)), _mm256_div_pd(c, u));
  __m256d res = _mm256_mul_pd(s, _mm256_add_pd(hfsq, R));
  res = _mm256_add_pd(res, corr);
  res = _mm256_sub_pd(res, hfsq);
  res = _mm256_add_pd(res, f);
  res = _mm256_add_pd(res, _mm256_mul_pd(dk, _mm256_set1_pd(kLn2Hi)));
  return _mm256_blendv_pd(res, x, special);
}

void vlog1p_avx2(double* dst, const double* a, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(dst + i, log1p4(_mm256_loadu_pd(a + i)));
  for (; i < n; ++i) dst[i] = log1p_elem(a[i]);
}

void solve4_fwd_avx2(const double* L, const double* inv_diag, std::size_t d,
                     const double* rhsT, double* wT, double* s4) {
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t r = 0; r < d; ++r) {
    __m256d t = _mm256_loadu_pd(rhsT + 4 * r);
    const double* row = L + r * d;
    for (std::size_t c = 0; c < r; ++c)
      t = _mm256_sub_pd(
          t, _mm256_mul_pd(_mm256_set1_pd(row[c]), _mm256_loadu_pd(wT + 4 * c)));
    t = _mm256_mul_pd(t, _mm256_set1_pd(inv_diag[r]));
    _mm256_storeu_pd(wT + 4 * r, t);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(t, t));
  }
  _mm256_storeu_pd(s4, acc);
}

void solve4_bwd_avx2(const double* L, const double* inv_diag, std::size_t d,
                     const double* wT, double* zT) {
  for (std::size_t ri = d; ri-- > 0;) {
    __m256d t = _mm256_loadu_pd(wT + 4 * ri);
    for (std::size_t c = ri + 1; c < d; ++c)
      t = _mm256_sub_pd(t, _mm256_mul_pd(_mm256_set1_pd(L[c * d + ri]),
                                         _mm256_loadu_pd(zT + 4 * c)));
    t = _mm256_mul_pd(t, _mm256_set1_pd(inv_diag[ri]));
    _mm256_storeu_pd(zT + 4 * ri, t);
  }
}

#else  // non-x86 fallbacks; never selected by the dispatcher

void add_avx2(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}
void sub_avx2(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}
void scale_avx2(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = s * a[i];
}
void axpy_avx2(double* dst, double s, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += s * x[i];
}
void extrapolate_avx2(double* dst, const double* x, const double* xprev,
                      double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] + c * (x[i] - xprev[i]);
}
double dot_avx2(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}
double sumsq_avx2(const double* a, std::size_t n) {
  double acc[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * a[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}
void vexp_avx2(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = exp_elem(a[i]);
}
void vlog1p_avx2(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = log1p_elem(a[i]);
}
void solve4_fwd_avx2(const double* L, const double* inv_diag, std::size_t d,
                     const double* rhsT, double* wT, double* s4) {
  for (int j = 0; j < 4; ++j) {
    for (std::size_t r = 0; r < d; ++r) {
      double t = rhsT[4 * r + j];
      for (std::size_t c = 0; c < r; ++c) t -= L[r * d + c] * wT[4 * c + j];
      wT[4 * r + j] = t * inv_diag[r];
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) acc += wT[4 * r + j] * wT[4 * r + j];
    s4[j] = acc;
  }
}
void solve4_bwd_avx2(const double* L, const double* inv_diag, std::size_t d,
                     const double* wT, double* zT) {
  for (int j = 0; j < 4; ++j) {
    for (std::size_t ri = d; ri-- > 0;) {
      double t = wT[4 * ri + j];
      for (std::size_t c = ri + 1; c < d; ++c)
        t -= L[c * d + ri] * zT[4 * c + j];
      zT[4 * ri + j] = t * inv_diag[ri];
    }
  }
}

#endif

}  // namespace palmkit::simd::detail
