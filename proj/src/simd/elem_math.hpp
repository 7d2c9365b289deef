#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

// Shared elementwise algorithms behind the vexp / vlog1p kernels.  The scalar
// dispatch path loops over these functions and the AVX2 path uses them for
// loop tails; the 4-lane bodies in kernels_avx2.cpp replicate the exact
// operation sequence with intrinsics.  Every step is an exactly rounded IEEE
// operation (the project builds with -ffp-contract=off, and the vector bodies
// use separate mul/add intrinsics), so scalar results and vector lanes agree
// bit for bit.

namespace palmkit::simd::detail {

// Cody-Waite split of ln 2.  kLn2Hi carries 25 trailing zero bits, so
// k * kLn2Hi is exact for integral |k| < 2^25.
inline constexpr double kInvLn2 = 1.44269504088896338700e+00;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;

// Taylor coefficients 1/i! for the exp kernel; with |r| <= ln2/2 the
// degree-13 truncation error is below 2^-57 relative.
inline constexpr double kExpC[14] = {
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
};

// Minimax coefficients for log((1+s)/(1-s)) / s - 2 on the reduced interval
// (the classic fdlibm log kernel; absolute error of the fitted remainder is
// below 2^-58.45).
inline constexpr double kLg[7] = {
    6.666666666666735130e-01, 3.999999999940941908e-01,
    2.857142874366239149e-01, 2.222219843214978396e-01,
    1.818357216161805012e-01, 1.531383769920937332e-01,
    1.479819860511658591e-01,
};

// exp(x) via x = k ln2 + r and a polynomial on |r| <= ln2/2.  The 2^k scale
// is applied in two exact halves so deep-subnormal results underflow
// gradually; those may differ from a correctly rounded exp by one ulp, and
// the input clamp flushes exp(x) for x <= -746 to zero.  +/-inf behave as
// limits; NaN returns unchanged (the AVX2 lane body propagates the same
// payload through its arithmetic).
inline double exp_elem(double x) {
  if (x != x) return x;
  // Clamp order matches _mm256_max_pd / _mm256_min_pd operand semantics.
  double xc = (-746.0 > x) ? -746.0 : x;
  xc = (710.0 < xc) ? 710.0 : xc;
  const double kd = std::nearbyint(xc * kInvLn2);
  double r = xc - kd * kLn2Hi;
  r = r - kd * kLn2Lo;
  double p = kExpC[13];
  for (int i = 12; i >= 0; --i) p = p * r + kExpC[i];
  const int ki = static_cast<int>(kd);  // kd is integral, |kd| <= 1076
  const int k1 = ki >> 1;
  const int k2 = ki - k1;
  const double s1 =
      std::bit_cast<double>(static_cast<std::uint64_t>(k1 + 1023) << 52);
  const double s2 =
      std::bit_cast<double>(static_cast<std::uint64_t>(k2 + 1023) << 52);
  return (p * s1) * s2;
}

// log1p(x) for x >= 0 (callers feed nonnegative ratios).  Splits u = 1 + x
// into 2^k * m with m in [sqrt(2)/2, sqrt(2)), evaluates the fdlibm log
// kernel on m, and folds in the exact two-sum rounding error of 1 + x, so
// accuracy holds for tiny x as well.  +inf and NaN return unchanged.
inline double log1p_elem(double x) {
  if (!(x < std::numeric_limits<double>::infinity())) return x;
  const double u = 1.0 + x;
  const double bv = u - 1.0;
  const double av = u - bv;
  const double c = (1.0 - av) + (x - bv);  // 1 + x = u + c exactly
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(u);
  const std::uint64_t frac = bits & 0x000FFFFFFFFFFFFFULL;
  // Halve the mantissa part once it reaches sqrt(2) so m stays in range.
  const std::uint64_t incr = frac > 0x0006A09E667F3BCCULL ? 1u : 0u;
  const double dk =
      static_cast<double>(static_cast<std::int64_t>((bits >> 52) + incr)) -
      1023.0;
  const double m = std::bit_cast<double>(frac | ((1023ULL - incr) << 52));
  const double f = m - 1.0;
  const double hfsq = 0.5 * (f * f);
  const double s = f / (2.0 + f);
  const double z = s * s;
  const double w = z * z;
  const double t1 = w * (kLg[1] + w * (kLg[3] + w * kLg[5]));
  const double t2 = z * (kLg[0] + w * (kLg[2] + w * (kLg[4] + w * kLg[6])));
  const double R = t2 + t1;
  const double corr = dk * kLn2Lo + c / u;
  return ((((s * (hfsq + R)) + corr) - hfsq) + f) + dk * kLn2Hi;
}

}  // namespace palmkit::simd::detail
