#include "palmkit/studentt/tmm.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <limits>

#include "palmkit/errors.hpp"
#include "palmkit/simd/kernels.hpp"
#include "palmkit/studentt/special.hpp"

namespace palmkit {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Raw-parameter view shared by the free functions and the problem adapter.
struct RawView {
  const double* alpha;  // [K]
  const double* nu;     // [K]
  const double* mu;     // d x K row-major
  const double* sigma;  // K x d x d
  std::int64_t K = 0;
  std::int64_t d = 0;
  double eps = 0.0;
};

struct EngineOut {
  double* nll = nullptr;
  double* galpha = nullptr;  // [K]
  double* gnu = nullptr;     // [K]
  double* gmu = nullptr;     // d x K
  double* gsigma = nullptr;  // K x d x d
};

bool bytes_equal(const std::vector<double>& a, const double* b,
                 std::size_t count) {
  return a.size() == count &&
         std::memcmp(a.data(), b, count * sizeof(double)) == 0;
}

}  // namespace

// Two content-keyed caches: Cholesky factors keyed on the sigma block bytes,
// and per-(sample, component) solve results keyed on (batch, mu, sigma).
// Solver steps alternate between the current iterate, the previous iterate,
// and a probe point over the same minibatch, so the pair cache keeps three
// least-recently-used slots.  Keys determine the cached values exactly, so a
// hit returns bit for bit what recomputation would produce.
struct detail::TmmCaches {
  bool fac_valid = false;
  std::vector<double> fac_key;
  std::vector<SpdFactor> fac;
  std::vector<double> fac_inv_diag;  // K x d

  struct PairSlot {
    bool valid = false;
    std::uint64_t tick = 0;
    std::vector<std::int64_t> batch;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> s;  // b x K
    std::vector<double> z;  // b x K x d, z = Sigma^{-1}(x - mu)
  };
  std::array<PairSlot, 3> pair;
  std::uint64_t pair_tick = 0;
};

namespace {

using Caches = detail::TmmCaches;

SpdFactor factor_component(const RawView& P, std::int64_t k) {
  const std::int64_t d = P.d;
  const double* S = P.sigma + k * d * d;
  Tensor scatter = Tensor::matrix(d, d);
  for (std::int64_t r = 0; r < d; ++r)
    for (std::int64_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::int64_t m = 0; m < d; ++m) acc += S[m * d + r] * S[m * d + c];
      scatter(r, c) = acc;
    }
  for (std::int64_t r = 0; r < d; ++r) scatter(r, r) += P.eps;
  return cholesky_spd(scatter);
}

// forward solve L w = diff, s = |w|^2; then z = L^{-T} w when z != nullptr
double solve_pair(const double* L, const double* inv_diag, std::int64_t d,
                  const double* diff, double* w, double* z) {
  for (std::int64_t r = 0; r < d; ++r) {
    double t = diff[r];
    const double* row = L + r * d;
    for (std::int64_t c = 0; c < r; ++c) t -= row[c] * w[c];
    w[r] = t * inv_diag[r];
  }
  double s = 0.0;
  for (std::int64_t r = 0; r < d; ++r) s += w[r] * w[r];
  if (z) {
    for (std::int64_t r = d - 1; r >= 0; --r) {
      double t = w[r];
      for (std::int64_t c = r + 1; c < d; ++c) t -= L[c * d + r] * z[c];
      z[r] = t * inv_diag[r];
    }
  }
  return s;
}

void tmm_eval(const RawView& P, const Tensor& X,
              std::span<const std::int64_t> batch, const EngineOut& out,
              Caches* cache) {
  if (batch.empty()) throw ConfigError("tmm_eval: empty batch");
  const std::int64_t K = P.K, d = P.d;
  const std::int64_t b = static_cast<std::int64_t>(batch.size());
  const std::size_t sig_count = static_cast<std::size_t>(K * d * d);
  const std::size_t mu_count = static_cast<std::size_t>(d * K);

  // --- component factors (keyed on sigma bytes) ---------------------------
  std::vector<SpdFactor> local_fac;
  std::vector<double> local_inv_diag;
  std::vector<SpdFactor>* fac = &local_fac;
  std::vector<double>* inv_diag = &local_inv_diag;
  bool fac_hit = false;
  if (cache) {
    fac = &cache->fac;
    inv_diag = &cache->fac_inv_diag;
    fac_hit = cache->fac_valid && bytes_equal(cache->fac_key, P.sigma,
                                              sig_count);
  }
  if (!fac_hit) {
    fac->clear();
    inv_diag->assign(static_cast<std::size_t>(K * d), 0.0);
    for (std::int64_t k = 0; k < K; ++k) {
      fac->push_back(factor_component(P, k));
      const Tensor& L = fac->back().lower;
      for (std::int64_t r = 0; r < d; ++r)
        (*inv_diag)[static_cast<std::size_t>(k * d + r)] = 1.0 / L(r, r);
    }
    if (cache) {
      cache->fac_key.assign(P.sigma, P.sigma + sig_count);
      cache->fac_valid = true;
      // Pair slots stay valid: their keys include the sigma bytes, so stale
      // entries simply stop matching.
    }
  }

  // --- per-component scalars (cheap, recomputed every call) ---------------
  double amax = kNegInf;
  for (std::int64_t k = 0; k < K; ++k) amax = std::max(amax, P.alpha[k]);
  double zacc = 0.0;
  for (std::int64_t k = 0; k < K; ++k) zacc += std::exp(P.alpha[k] - amax);
  const double log_z = amax + std::log(zacc);

  std::vector<double> log_w(K), w_t(K), nu_t(K), c_half(K), lp_const(K),
      dig(K);
  for (std::int64_t k = 0; k < K; ++k) {
    log_w[k] = P.alpha[k] - log_z;
    w_t[k] = std::exp(log_w[k]);
    nu_t[k] = P.nu[k] * P.nu[k] + P.eps;
    c_half[k] = 0.5 * (static_cast<double>(d) + nu_t[k]);
    lp_const[k] = lgamma_pos(c_half[k]) - lgamma_pos(0.5 * nu_t[k]) -
                  0.5 * static_cast<double>(d) * std::log(nu_t[k] * kPi) -
                  0.5 * (*fac)[static_cast<std::size_t>(k)].log_det;
    if (out.gnu)
      dig[k] = digamma(0.5 * nu_t[k]) - digamma(c_half[k]);
  }

  // Sigma^{-1} per component, needed only for the sigma gradient; averaged
  // with its transpose so downstream products stay bitwise symmetric.
  std::vector<double> inv;
  if (out.gsigma) {
    inv.assign(sig_count, 0.0);
    std::vector<double> col(static_cast<std::size_t>(d));
    for (std::int64_t k = 0; k < K; ++k) {
      const SpdFactor& f = (*fac)[static_cast<std::size_t>(k)];
      double* ik = inv.data() + k * d * d;
      for (std::int64_t j = 0; j < d; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[static_cast<std::size_t>(j)] = 1.0;
        solve_lower_inplace(f, col.data());
        solve_lower_t_inplace(f, col.data());
        for (std::int64_t r = 0; r < d; ++r) ik[r * d + j] = col[static_cast<std::size_t>(r)];
      }
      for (std::int64_t r = 0; r < d; ++r)
        for (std::int64_t c = r + 1; c < d; ++c) {
          const double m = 0.5 * (ik[r * d + c] + ik[c * d + r]);
          ik[r * d + c] = m;
          ik[c * d + r] = m;
        }
    }
  }

  // --- pair data (keyed on batch + mu + sigma bytes) ----------------------
  bool pair_hit = false;
  double* s_all = nullptr;
  double* z_all = nullptr;
  Caches::PairSlot* slot = nullptr;
  if (cache) {
    for (Caches::PairSlot& ps : cache->pair) {
      if (ps.valid && ps.batch.size() == batch.size() &&
          std::memcmp(ps.batch.data(), batch.data(),
                      batch.size() * sizeof(std::int64_t)) == 0 &&
          bytes_equal(ps.mu, P.mu, mu_count) &&
          bytes_equal(ps.sigma, P.sigma, sig_count)) {
        slot = &ps;
        pair_hit = true;
        break;
      }
    }
    if (!slot) {  // reuse an empty slot, else the least recently touched one
      slot = &cache->pair[0];
      for (Caches::PairSlot& ps : cache->pair) {
        if (!ps.valid) {
          slot = &ps;
          break;
        }
        if (ps.tick < slot->tick) slot = &ps;
      }
      slot->valid = false;
    }
    slot->tick = ++cache->pair_tick;
    slot->s.resize(static_cast<std::size_t>(b * K));
    slot->z.resize(static_cast<std::size_t>(b * K * d));
    s_all = slot->s.data();
    z_all = slot->z.data();
  }

  // --- main accumulation ---------------------------------------------------
  std::vector<double> ga, gn, gm, wsum, acc_a;
  if (out.galpha) ga.assign(static_cast<std::size_t>(K), 0.0);
  if (out.gnu) gn.assign(static_cast<std::size_t>(K), 0.0);
  if (out.gmu) gm.assign(static_cast<std::size_t>(K * d), 0.0);  // [k][r]
  if (out.gsigma) {
    wsum.assign(static_cast<std::size_t>(K), 0.0);
    acc_a.assign(sig_count, 0.0);  // upper triangles of sum p c z z^T
  }
  const bool need_grads = out.galpha || out.gnu || out.gmu || out.gsigma;

  // Samples are processed in chunks: the per-pair Mahalanobis terms are
  // filled four samples at a time with the batched triangular-solve kernels,
  // then log1p and exp run as flat vector sweeps over the whole chunk, and a
  // final scalar pass does the per-sample reduction and gradient
  // accumulation (in ascending sample order, like its per-sample
  // predecessor).
  const std::int64_t chunk = std::min<std::int64_t>(b, 256);
  std::vector<double> local_s, local_z;
  if (!cache) {
    local_s.resize(static_cast<std::size_t>(chunk * K));
    local_z.resize(static_cast<std::size_t>(chunk * K * d));
  }
  std::vector<double> lbuf(static_cast<std::size_t>(chunk * K)),
      ebuf(static_cast<std::size_t>(chunk * K)),
      tmaxv(static_cast<std::size_t>(chunk)),
      diff(static_cast<std::size_t>(d)), wbuf(static_cast<std::size_t>(d)),
      rhsT(static_cast<std::size_t>(4 * d)), wT(static_cast<std::size_t>(4 * d)),
      zT(static_cast<std::size_t>(4 * d));
  double s4[4];
  double nll_acc = 0.0;
  bool bad = false;

  for (std::int64_t bi0 = 0; bi0 < b && !bad; bi0 += chunk) {
    const std::int64_t bc = std::min<std::int64_t>(chunk, b - bi0);
    double* s_chunk = cache ? s_all + bi0 * K : local_s.data();
    double* z_chunk = cache ? z_all + bi0 * K * d : local_z.data();

    if (!pair_hit) {
      for (std::int64_t k = 0; k < K; ++k) {
        const SpdFactor& f = (*fac)[static_cast<std::size_t>(k)];
        const double* Lk = f.lower.data();
        const double* idk = inv_diag->data() + k * d;
        std::int64_t ci = 0;
        for (; ci + 4 <= bc; ci += 4) {
          for (std::int64_t r = 0; r < d; ++r)
            for (int j = 0; j < 4; ++j) {
              const std::int64_t i =
                  batch[static_cast<std::size_t>(bi0 + ci + j)];
              rhsT[static_cast<std::size_t>(4 * r + j)] =
                  X.data()[i * d + r] - P.mu[r * K + k];
            }
          simd::solve4_fwd(Lk, idk, static_cast<std::size_t>(d), rhsT.data(),
                           wT.data(), s4);
          simd::solve4_bwd(Lk, idk, static_cast<std::size_t>(d), wT.data(),
                           zT.data());
          for (int j = 0; j < 4; ++j) {
            s_chunk[(ci + j) * K + k] = s4[j];
            double* zkj = z_chunk + ((ci + j) * K + k) * d;
            for (std::int64_t r = 0; r < d; ++r)
              zkj[r] = zT[static_cast<std::size_t>(4 * r + j)];
          }
        }
        for (; ci < bc; ++ci) {  // tail: scalar path, identical arithmetic
          const std::int64_t i = batch[static_cast<std::size_t>(bi0 + ci)];
          const double* x = X.data() + i * d;
          for (std::int64_t r = 0; r < d; ++r)
            diff[static_cast<std::size_t>(r)] = x[r] - P.mu[r * K + k];
          s_chunk[ci * K + k] =
              solve_pair(Lk, idk, d, diff.data(), wbuf.data(),
                         z_chunk + (ci * K + k) * d);
        }
      }
    }

    const std::size_t ce = static_cast<std::size_t>(bc * K);
    for (std::int64_t ci = 0; ci < bc; ++ci)
      for (std::int64_t k = 0; k < K; ++k)
        lbuf[static_cast<std::size_t>(ci * K + k)] =
            s_chunk[ci * K + k] / nu_t[k];
    simd::vlog1p(lbuf.data(), lbuf.data(), ce);

    for (std::int64_t ci = 0; ci < bc; ++ci) {
      double tmax = kNegInf;
      for (std::int64_t k = 0; k < K; ++k) {
        const double tk = log_w[k] + lp_const[k] -
                          c_half[k] * lbuf[static_cast<std::size_t>(ci * K + k)];
        ebuf[static_cast<std::size_t>(ci * K + k)] = tk;
        if (tk > tmax) tmax = tk;
      }
      tmaxv[static_cast<std::size_t>(ci)] = tmax;
      for (std::int64_t k = 0; k < K; ++k)
        ebuf[static_cast<std::size_t>(ci * K + k)] -= tmax;
    }
    simd::vexp(ebuf.data(), ebuf.data(), ce);

    for (std::int64_t ci = 0; ci < bc && !bad; ++ci) {
      const double* erow = ebuf.data() + ci * K;
      double esum = 0.0;
      for (std::int64_t k = 0; k < K; ++k) esum += erow[k];
      const double lse = tmaxv[static_cast<std::size_t>(ci)] + std::log(esum);
      if (!std::isfinite(lse)) {
        bad = true;
        break;
      }
      nll_acc += lse;

      if (need_grads) {
        const double* srow = s_chunk + ci * K;
        const double* lrow = lbuf.data() + ci * K;
        const double inv_esum = 1.0 / esum;
        for (std::int64_t k = 0; k < K; ++k) {
          const double p = erow[k] * inv_esum;
          const double s = srow[k];
          if (out.galpha) ga[static_cast<std::size_t>(k)] += w_t[k] - p;
          if (out.gnu)
            gn[static_cast<std::size_t>(k)] +=
                p * P.nu[k] *
                (dig[k] + (static_cast<double>(d) - s) / (nu_t[k] + s) +
                 lrow[k]);
          if (out.gmu || out.gsigma) {
            const double c = (static_cast<double>(d) + nu_t[k]) / (nu_t[k] + s);
            const double pc = p * c;
            const double* zk = z_chunk + (ci * K + k) * d;
            if (out.gmu) {
              double* gk = gm.data() + k * d;
              for (std::int64_t r = 0; r < d; ++r) gk[r] += pc * zk[r];
            }
            if (out.gsigma) {
              wsum[static_cast<std::size_t>(k)] += p;
              double* ak = acc_a.data() + k * d * d;
              for (std::int64_t r = 0; r < d; ++r) {
                const double zr = pc * zk[r];
                for (std::int64_t c2 = r; c2 < d; ++c2)
                  ak[r * d + c2] += zr * zk[c2];
              }
            }
          }
        }
      }
    }
  }

  if (bad)
    throw NumericalError("mixture likelihood is not finite");

  if (cache && !pair_hit) {
    slot->batch.assign(batch.begin(), batch.end());
    slot->mu.assign(P.mu, P.mu + mu_count);
    slot->sigma.assign(P.sigma, P.sigma + sig_count);
    slot->valid = true;
  }

  // --- finalize -------------------------------------------------------------
  const double invb = 1.0 / static_cast<double>(b);
  bool nonfinite = false;
  if (out.nll) {
    *out.nll = -nll_acc * invb;
    nonfinite = nonfinite || !std::isfinite(*out.nll);
  }
  if (out.galpha)
    for (std::int64_t k = 0; k < K; ++k) {
      out.galpha[k] = ga[static_cast<std::size_t>(k)] * invb;
      nonfinite = nonfinite || !std::isfinite(out.galpha[k]);
    }
  if (out.gnu)
    for (std::int64_t k = 0; k < K; ++k) {
      out.gnu[k] = gn[static_cast<std::size_t>(k)] * invb;
      nonfinite = nonfinite || !std::isfinite(out.gnu[k]);
    }
  if (out.gmu)
    for (std::int64_t k = 0; k < K; ++k)
      for (std::int64_t r = 0; r < d; ++r) {
        out.gmu[r * K + k] = -gm[static_cast<std::size_t>(k * d + r)] * invb;
        nonfinite = nonfinite || !std::isfinite(out.gmu[r * K + k]);
      }
  if (out.gsigma) {
    std::vector<double> gt(static_cast<std::size_t>(d * d));
    for (std::int64_t k = 0; k < K; ++k) {
      const double* ik = inv.data() + k * d * d;
      const double* ak = acc_a.data() + k * d * d;
      const double wk = wsum[static_cast<std::size_t>(k)];
      for (std::int64_t r = 0; r < d; ++r)
        for (std::int64_t c = r; c < d; ++c) {
          const double v = (wk * ik[r * d + c] - ak[r * d + c]) * 0.5 * invb;
          gt[static_cast<std::size_t>(r * d + c)] = v;
          gt[static_cast<std::size_t>(c * d + r)] = v;
        }
      // chain to the raw block: S G + G S (S = raw slice, symmetric)
      const double* S = P.sigma + k * d * d;
      double* gout = out.gsigma + k * d * d;
      for (std::int64_t r = 0; r < d; ++r)
        for (std::int64_t c = 0; c < d; ++c) {
          double c1 = 0.0, c2 = 0.0;
          for (std::int64_t m = 0; m < d; ++m) {
            c1 += S[r * d + m] * gt[static_cast<std::size_t>(m * d + c)];
            c2 += gt[static_cast<std::size_t>(r * d + m)] * S[m * d + c];
          }
          gout[r * d + c] = c1 + c2;
          nonfinite = nonfinite || !std::isfinite(gout[r * d + c]);
        }
    }
  }
  if (nonfinite)
    throw NumericalError("mixture gradient is not finite");
}

RawView view_from_params(const TmmParams& p, const Tensor& sigma_flat) {
  RawView v;
  v.alpha = p.alpha_raw.data();
  v.nu = p.nu_raw.data();
  v.mu = p.mu.data();
  v.sigma = sigma_flat.data();
  v.K = p.K;
  v.d = p.d;
  v.eps = p.eps;
  return v;
}

Tensor flatten_sigma(const TmmParams& p) {
  Tensor out({p.K, p.d, p.d});
  for (std::int64_t k = 0; k < p.K; ++k)
    std::memcpy(out.data() + k * p.d * p.d,
                p.sigma_raw[static_cast<std::size_t>(k)].data(),
                static_cast<std::size_t>(p.d * p.d) * sizeof(double));
  return out;
}

void check_params(const TmmParams& p, const Dataset* data) {
  if (p.K < 1 || p.d < 1) throw ShapeError("TmmParams: K and d must be >= 1");
  if (!(p.eps > 0.0)) throw ConfigError("TmmParams: eps must be positive");
  if (p.alpha_raw.size() != p.K || p.nu_raw.size() != p.K)
    throw ShapeError("TmmParams: alpha_raw/nu_raw must have length K");
  if (p.mu.shape() != std::vector<std::int64_t>{p.d, p.K})
    throw ShapeError("TmmParams: mu must be d x K");
  if (static_cast<std::int64_t>(p.sigma_raw.size()) != p.K)
    throw ShapeError("TmmParams: need K scatter matrices");
  for (const Tensor& s : p.sigma_raw)
    if (s.shape() != std::vector<std::int64_t>{p.d, p.d})
      throw ShapeError("TmmParams: scatter matrices must be d x d");
  if (data && data->d != p.d)
    throw ShapeError("dataset dimension does not match parameters");
}

}  // namespace

ConstrainedParams apply_trafo(const TmmParams& params) {
  check_params(params, nullptr);
  const std::int64_t K = params.K, d = params.d;
  ConstrainedParams out;
  out.K = K;
  out.d = d;
  out.alpha = Tensor::vector(K);
  out.nu = Tensor::vector(K);
  out.mu = params.mu;

  double amax = kNegInf;
  for (std::int64_t k = 0; k < K; ++k)
    amax = std::max(amax, params.alpha_raw[k]);
  double zacc = 0.0;
  for (std::int64_t k = 0; k < K; ++k)
    zacc += std::exp(params.alpha_raw[k] - amax);
  for (std::int64_t k = 0; k < K; ++k)
    out.alpha[k] = std::exp(params.alpha_raw[k] - amax) / zacc;

  for (std::int64_t k = 0; k < K; ++k)
    out.nu[k] = params.nu_raw[k] * params.nu_raw[k] + params.eps;

  Tensor sigma_flat = flatten_sigma(params);
  RawView v = view_from_params(params, sigma_flat);
  for (std::int64_t k = 0; k < K; ++k) {
    SpdFactor f = factor_component(v, k);
    Tensor scatter = Tensor::matrix(d, d);
    // reconstruct the scatter matrix for callers that want it explicitly
    const double* S = sigma_flat.data() + k * d * d;
    for (std::int64_t r = 0; r < d; ++r)
      for (std::int64_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::int64_t m = 0; m < d; ++m)
          acc += S[m * d + r] * S[m * d + c];
        scatter(r, c) = acc;
      }
    for (std::int64_t r = 0; r < d; ++r) scatter(r, r) += params.eps;
    out.sigma.push_back(std::move(scatter));
    out.factor.push_back(std::move(f));
  }
  return out;
}

double student_t_logpdf(const double* x, std::int64_t d, double nu,
                        const double* mu, const SpdFactor& sigma) {
  if (!(nu > 0.0)) throw ConfigError("student_t_logpdf: nu must be positive");
  if (sigma.dim != d) throw ShapeError("student_t_logpdf: dimension mismatch");
  std::vector<double> w(static_cast<std::size_t>(d));
  for (std::int64_t r = 0; r < d; ++r) w[static_cast<std::size_t>(r)] = x[r] - mu[r];
  solve_lower_inplace(sigma, w.data());
  double s = 0.0;
  for (double v : w) s += v * v;
  const double c_half = 0.5 * (static_cast<double>(d) + nu);
  const double lp = lgamma_pos(c_half) - lgamma_pos(0.5 * nu) -
                    0.5 * static_cast<double>(d) * std::log(nu * kPi) -
                    0.5 * sigma.log_det - c_half * std::log1p(s / nu);
  if (!std::isfinite(lp))
    throw NumericalError("student_t_logpdf: non-finite result");
  return lp;
}

double student_t_logpdf(const Tensor& x, double nu, const Tensor& mu,
                        const SpdFactor& sigma) {
  if (x.size() != mu.size() || x.size() != sigma.dim)
    throw ShapeError("student_t_logpdf: dimension mismatch");
  return student_t_logpdf(x.data(), x.size(), nu, mu.data(), sigma);
}

double mm_nll(const TmmParams& params, const Dataset& data) {
  check_params(params, &data);
  Tensor sigma_flat = flatten_sigma(params);
  RawView v = view_from_params(params, sigma_flat);
  const std::vector<std::int64_t> idx = all_indices(data.n);
  double nll = 0.0;
  EngineOut out;
  out.nll = &nll;
  tmm_eval(v, data.points, idx, out, nullptr);
  return nll;
}

Tensor mm_nll_grad(const TmmParams& params, const Dataset& data,
                   TmmBlock block) {
  check_params(params, &data);
  Tensor sigma_flat = flatten_sigma(params);
  RawView v = view_from_params(params, sigma_flat);
  const std::vector<std::int64_t> idx = all_indices(data.n);
  EngineOut out;
  Tensor g;
  switch (block) {
    case TmmBlock::alpha:
      g = Tensor::vector(params.K);
      out.galpha = g.data();
      break;
    case TmmBlock::nu:
      g = Tensor::vector(params.K);
      out.gnu = g.data();
      break;
    case TmmBlock::mu:
      g = Tensor::matrix(params.d, params.K);
      out.gmu = g.data();
      break;
    case TmmBlock::sigma:
      g = Tensor({params.K, params.d, params.d});
      out.gsigma = g.data();
      break;
  }
  tmm_eval(v, data.points, idx, out, nullptr);
  return g;
}

BlockVec tmm_to_blockvec(const TmmParams& params) {
  check_params(params, nullptr);
  BlockVec x;
  x.add_block("alpha", params.alpha_raw);
  x.add_block("nu", params.nu_raw);
  x.add_block("mu", params.mu);
  x.add_block("sigma", flatten_sigma(params));
  return x;
}

TmmParams tmm_from_blockvec(const BlockVec& x, double eps) {
  TmmParams p;
  p.K = x.value(0).size();
  p.d = x.value(2).shape()[0];
  p.eps = eps;
  p.alpha_raw = x.value(0);
  p.nu_raw = x.value(1);
  p.mu = x.value(2);
  const Tensor& sig = x.value(3);
  for (std::int64_t k = 0; k < p.K; ++k) {
    Tensor s = Tensor::matrix(p.d, p.d);
    std::memcpy(s.data(), sig.data() + k * p.d * p.d,
                static_cast<std::size_t>(p.d * p.d) * sizeof(double));
    p.sigma_raw.push_back(std::move(s));
  }
  check_params(p, nullptr);
  return p;
}

TmmProblem::TmmProblem(Dataset data, std::int64_t K, double eps)
    : data_(std::move(data)), K_(K), eps_(eps), caches_(new Caches) {
  if (data_.n < 1 || data_.d < 1)
    throw ShapeError("TmmProblem: dataset must be nonempty");
  if (data_.points.shape() != std::vector<std::int64_t>{data_.n, data_.d})
    throw ShapeError("TmmProblem: points must be n x d");
  if (K_ < 1) throw ConfigError("TmmProblem: K must be >= 1");
  if (!(eps_ > 0.0)) throw ConfigError("TmmProblem: eps must be positive");
  specs_ = {
      {"alpha", {K_}, false},
      {"nu", {K_}, false},
      {"mu", {data_.d, K_}, false},
      {"sigma", {K_, data_.d, data_.d}, true},
  };
}

TmmProblem::~TmmProblem() = default;

namespace {

RawView view_from_blockvec(const BlockVec& point, std::int64_t K,
                           std::int64_t d, double eps) {
  RawView v;
  v.alpha = point.value(0).data();
  v.nu = point.value(1).data();
  v.mu = point.value(2).data();
  v.sigma = point.value(3).data();
  v.K = K;
  v.d = d;
  v.eps = eps;
  return v;
}

}  // namespace

double TmmProblem::eval_batch(const BlockVec& point,
                              std::span<const std::int64_t> batch) const {
  RawView v = view_from_blockvec(point, K_, data_.d, eps_);
  double nll = 0.0;
  EngineOut out;
  out.nll = &nll;
  tmm_eval(v, data_.points, batch, out, caches_.get());
  return nll;
}

Tensor TmmProblem::grad_block_batch(const BlockVec& point, std::size_t block,
                                    std::span<const std::int64_t> batch) const {
  RawView v = view_from_blockvec(point, K_, data_.d, eps_);
  EngineOut out;
  Tensor g(specs_[block].shape);
  switch (block) {
    case 0: out.galpha = g.data(); break;
    case 1: out.gnu = g.data(); break;
    case 2: out.gmu = g.data(); break;
    case 3: out.gsigma = g.data(); break;
    default: throw ShapeError("TmmProblem: block index out of range");
  }
  tmm_eval(v, data_.points, batch, out, caches_.get());
  return g;
}

BlockVec TmmProblem::grad_all_batch(const BlockVec& point,
                                    std::span<const std::int64_t> batch) const {
  BlockVec g = make_point();
  RawView v = view_from_blockvec(point, K_, data_.d, eps_);
  EngineOut out;
  out.galpha = g.value(0).data();
  out.gnu = g.value(1).data();
  out.gmu = g.value(2).data();
  out.gsigma = g.value(3).data();
  tmm_eval(v, data_.points, batch, out, caches_.get());
  return g;
}

double TmmProblem::eval_with_grad_all(const BlockVec& point,
                                      std::span<const std::int64_t> batch,
                                      BlockVec& grad_out) const {
  grad_out = make_point();
  RawView v = view_from_blockvec(point, K_, data_.d, eps_);
  double nll = 0.0;
  EngineOut out;
  out.nll = &nll;
  out.galpha = grad_out.value(0).data();
  out.gnu = grad_out.value(1).data();
  out.gmu = grad_out.value(2).data();
  out.gsigma = grad_out.value(3).data();
  tmm_eval(v, data_.points, batch, out, caches_.get());
  return nll;
}

}  // namespace palmkit
