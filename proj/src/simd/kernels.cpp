#include "palmkit/simd/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "palmkit/errors.hpp"
#include "elem_math.hpp"

// Scalar reference kernels plus the runtime dispatcher.  The AVX2
// counterparts live in kernels_avx2.cpp (compiled with -mavx2) and must
// produce bit-identical results; see the header for the reduction order.

namespace palmkit::simd {

namespace detail {
void add_avx2(double*, const double*, const double*, std::size_t);
void sub_avx2(double*, const double*, const double*, std::size_t);
void scale_avx2(double*, const double*, double, std::size_t);
void axpy_avx2(double*, double, const double*, std::size_t);
void extrapolate_avx2(double*, const double*, const double*, double,
                      std::size_t);
double dot_avx2(const double*, const double*, std::size_t);
double sumsq_avx2(const double*, std::size_t);
void vexp_avx2(double*, const double*, std::size_t);
void vlog1p_avx2(double*, const double*, std::size_t);
void solve4_fwd_avx2(const double*, const double*, std::size_t, const double*,
                     double*, double*);
void solve4_bwd_avx2(const double*, const double*, std::size_t, const double*,
                     double*);
}  // namespace detail

namespace {

void add_scalar(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_scalar(double* dst, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

void scale_scalar(double* dst, const double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = s * a[i];
}

void axpy_scalar(double* dst, double s, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] += s * x[i];
}

void extrapolate_scalar(double* dst, const double* x, const double* xprev,
                        double c, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] + c * (x[i] - xprev[i]);
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

double sumsq_scalar(const double* a, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) acc[i & 3] += a[i] * a[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void vexp_scalar(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = detail::exp_elem(a[i]);
}

void vlog1p_scalar(double* dst, const double* a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = detail::log1p_elem(a[i]);
}

void solve4_fwd_scalar(const double* L, const double* inv_diag, std::size_t d,
                       const double* rhsT, double* wT, double* s4) {
  for (int j = 0; j < 4; ++j) {
    for (std::size_t r = 0; r < d; ++r) {
      double t = rhsT[4 * r + j];
      const double* row = L + r * d;
      for (std::size_t c = 0; c < r; ++c) t -= row[c] * wT[4 * c + j];
      wT[4 * r + j] = t * inv_diag[r];
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < d; ++r) acc += wT[4 * r + j] * wT[4 * r + j];
    s4[j] = acc;
  }
}

void solve4_bwd_scalar(const double* L, const double* inv_diag, std::size_t d,
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

struct Kernels {
  void (*add)(double*, const double*, const double*, std::size_t);
  void (*sub)(double*, const double*, const double*, std::size_t);
  void (*scale)(double*, const double*, double, std::size_t);
  void (*axpy)(double*, double, const double*, std::size_t);
  void (*extrapolate)(double*, const double*, const double*, double,
                      std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
  double (*sumsq)(const double*, std::size_t);
  void (*vexp)(double*, const double*, std::size_t);
  void (*vlog1p)(double*, const double*, std::size_t);
  void (*solve4_fwd)(const double*, const double*, std::size_t, const double*,
                     double*, double*);
  void (*solve4_bwd)(const double*, const double*, std::size_t, const double*,
                     double*);
};

constexpr Kernels kScalar = {
    add_scalar,  sub_scalar,         scale_scalar,
    axpy_scalar, extrapolate_scalar, dot_scalar,
    sumsq_scalar, vexp_scalar,       vlog1p_scalar,
    solve4_fwd_scalar, solve4_bwd_scalar};
constexpr Kernels kAvx2 = {
    detail::add_avx2,   detail::sub_avx2,
    detail::scale_avx2, detail::axpy_avx2,
    detail::extrapolate_avx2,
    detail::dot_avx2,   detail::sumsq_avx2,
    detail::vexp_avx2,  detail::vlog1p_avx2,
    detail::solve4_fwd_avx2, detail::solve4_bwd_avx2};

std::atomic<const Kernels*> g_kernels{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};

const Kernels* resolve() {
  const Kernels* k = g_kernels.load(std::memory_order_acquire);
  if (k) return k;
  Isa isa = cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
  if (const char* env = std::getenv("PALMKIT_SIMD")) {
    std::string v(env);
    if (v == "scalar") {
      isa = Isa::scalar;
    } else if (v == "avx2") {
      if (!cpu_has_avx2())
        throw ConfigError("PALMKIT_SIMD=avx2 requested but CPU lacks AVX2");
      isa = Isa::avx2;
    } else if (!v.empty() && v != "auto") {
      throw ConfigError("PALMKIT_SIMD must be scalar, avx2 or auto, got '" +
                        v + "'");
    }
  }
  g_isa.store(isa, std::memory_order_relaxed);
  k = (isa == Isa::avx2) ? &kAvx2 : &kScalar;
  g_kernels.store(k, std::memory_order_release);
  return k;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Isa active_isa() {
  resolve();
  return g_isa.load(std::memory_order_relaxed);
}

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2())
    throw ConfigError("force_isa(avx2): CPU lacks AVX2");
  g_isa.store(isa, std::memory_order_relaxed);
  g_kernels.store(isa == Isa::avx2 ? &kAvx2 : &kScalar,
                  std::memory_order_release);
}

void add(double* dst, const double* a, const double* b, std::size_t n) {
  resolve()->add(dst, a, b, n);
}
void sub(double* dst, const double* a, const double* b, std::size_t n) {
  resolve()->sub(dst, a, b, n);
}
void scale(double* dst, const double* a, double s, std::size_t n) {
  resolve()->scale(dst, a, s, n);
}
void axpy(double* dst, double s, const double* x, std::size_t n) {
  resolve()->axpy(dst, s, x, n);
}
void extrapolate(double* dst, const double* x, const double* xprev, double c,
                 std::size_t n) {
  resolve()->extrapolate(dst, x, xprev, c, n);
}
double dot(const double* a, const double* b, std::size_t n) {
  return resolve()->dot(a, b, n);
}
double sumsq(const double* a, std::size_t n) {
  return resolve()->sumsq(a, n);
}
void vexp(double* dst, const double* a, std::size_t n) {
  resolve()->vexp(dst, a, n);
}
void vlog1p(double* dst, const double* a, std::size_t n) {
  resolve()->vlog1p(dst, a, n);
}
void solve4_fwd(const double* L, const double* inv_diag, std::size_t d,
                const double* rhsT, double* wT, double* s4) {
  resolve()->solve4_fwd(L, inv_diag, d, rhsT, wT, s4);
}
void solve4_bwd(const double* L, const double* inv_diag, std::size_t d,
                const double* wT, double* zT) {
  resolve()->solve4_bwd(L, inv_diag, d, wT, zT);
}

void matvec(const double* a, std::size_t rows, std::size_t cols,
            const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols,
              const double* x, double* y) {
  std::memset(y, 0, cols * sizeof(double));
  for (std::size_t r = 0; r < rows; ++r) axpy(y, x[r], a + r * cols, cols);
}

}  // namespace palmkit::simd
