#include "palmkit/studentt/sample.hpp"

#include <algorithm>
#include <cmath>

#include "palmkit/errors.hpp"

namespace palmkit {

Dataset sample_mm(const Rng& rng, const ConstrainedParams& truth,
                  std::int64_t n) {
  if (n < 1) throw ConfigError("sample_mm: n must be >= 1");
  const std::int64_t K = truth.K, d = truth.d;
  if (static_cast<std::int64_t>(truth.factor.size()) != K)
    throw ShapeError("sample_mm: truth must carry K Cholesky factors");

  Rng comp = rng.stream("component");
  Rng nrm = rng.stream("normal");
  Rng chi = rng.stream("chisq");

  Dataset out;
  out.n = n;
  out.d = d;
  out.points = Tensor::matrix(n, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  std::vector<double> v(static_cast<std::size_t>(d));
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = comp.uniform();
    std::int64_t k = K - 1;
    double acc = 0.0;
    for (std::int64_t j = 0; j < K; ++j) {
      acc += truth.alpha[j];
      if (u < acc) {
        k = j;
        break;
      }
    }
    for (std::int64_t r = 0; r < d; ++r) z[static_cast<std::size_t>(r)] = nrm.normal();
    const double nu = truth.nu[k];
    double w = chi.chi_square(nu);
    if (!(w > 0.0)) w = 1e-300;  // guard against literal zero draws
    const double scale = std::sqrt(nu / w);
    const Tensor& L = truth.factor[static_cast<std::size_t>(k)].lower;
    for (std::int64_t r = 0; r < d; ++r) {
      double acc_r = 0.0;
      for (std::int64_t c = 0; c <= r; ++c)
        acc_r += L(r, c) * z[static_cast<std::size_t>(c)];
      v[static_cast<std::size_t>(r)] = acc_r;
    }
    for (std::int64_t r = 0; r < d; ++r)
      out.points(i, r) = truth.mu(r, k) + scale * v[static_cast<std::size_t>(r)];
  }
  return out;
}

ConstrainedParams generate_ground_truth(const Rng& rng, std::int64_t K,
                                        std::int64_t d) {
  if (K < 1 || d < 1)
    throw ConfigError("generate_ground_truth: K and d must be >= 1");
  Rng ra = rng.stream("alpha");
  Rng rn = rng.stream("nu");
  Rng rm = rng.stream("mu");
  Rng rs = rng.stream("sigma");

  ConstrainedParams out;
  out.K = K;
  out.d = d;
  out.alpha = Tensor::vector(K);
  out.nu = Tensor::vector(K);
  out.mu = Tensor::matrix(d, K);

  double total = 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    const double a = ra.normal();
    out.alpha[k] = a * a + 1.0;
    total += out.alpha[k];
  }
  for (std::int64_t k = 0; k < K; ++k) out.alpha[k] /= total;

  for (std::int64_t k = 0; k < K; ++k) {
    const double b = 10.0 * rn.normal();
    out.nu[k] = std::min(b * b + 1.0, 100.0);
  }

  for (std::int64_t r = 0; r < d; ++r)
    for (std::int64_t k = 0; k < K; ++k) out.mu(r, k) = 2.0 * rm.normal();

  for (std::int64_t k = 0; k < K; ++k) {
    Tensor base = Tensor::matrix(d, d);
    for (std::int64_t i = 0; i < base.size(); ++i) base[i] = rs.normal();
    Tensor scatter = matmul_tn(base, base);
    for (std::int64_t r = 0; r < d; ++r) scatter(r, r) += 1.0;
    out.factor.push_back(cholesky_spd(scatter));
    out.sigma.push_back(std::move(scatter));
  }
  return out;
}

TmmParams init_params(const Dataset& data, std::int64_t K, const Rng& rng,
                      double eps) {
  const std::int64_t n = data.n, d = data.d;
  if (K < 1) throw ConfigError("init_params: K must be >= 1");
  if (!(eps > 0.0)) throw ConfigError("init_params: eps must be positive");
  if (n < K * (d + 1))
    throw ConfigError("init_params: need n >= K(d+1) samples");

  Rng assign = rng.stream("assign");
  Rng steal = rng.stream("reassign");
  std::vector<std::int64_t> label(static_cast<std::size_t>(n));
  std::vector<std::int64_t> count(static_cast<std::size_t>(K), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    label[static_cast<std::size_t>(i)] = assign.uniform_int(K);
    ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
  }
  // every class must own at least one sample before moment estimation
  for (std::int64_t k = 0; k < K; ++k) {
    if (count[static_cast<std::size_t>(k)] > 0) continue;
    std::int64_t big = 0;
    for (std::int64_t j = 1; j < K; ++j)
      if (count[static_cast<std::size_t>(j)] > count[static_cast<std::size_t>(big)]) big = j;
    std::int64_t pick = steal.uniform_int(count[static_cast<std::size_t>(big)]);
    for (std::int64_t i = 0; i < n; ++i) {
      if (label[static_cast<std::size_t>(i)] != big) continue;
      if (pick-- == 0) {
        label[static_cast<std::size_t>(i)] = k;
        --count[static_cast<std::size_t>(big)];
        ++count[static_cast<std::size_t>(k)];
        break;
      }
    }
  }

  TmmParams p;
  p.K = K;
  p.d = d;
  p.eps = eps;
  p.alpha_raw = Tensor::vector(K);
  p.nu_raw = Tensor::vector(K);
  p.mu = Tensor::matrix(d, K);

  const double nu_raw_init = std::sqrt(3.0 - eps);
  for (std::int64_t k = 0; k < K; ++k) {
    const double m = static_cast<double>(count[static_cast<std::size_t>(k)]);
    p.alpha_raw[k] = std::log(m / static_cast<double>(n));
    p.nu_raw[k] = nu_raw_init;

    Tensor mean = Tensor::vector(d);
    for (std::int64_t i = 0; i < n; ++i) {
      if (label[static_cast<std::size_t>(i)] != k) continue;
      for (std::int64_t r = 0; r < d; ++r) mean[r] += data.points(i, r);
    }
    for (std::int64_t r = 0; r < d; ++r) {
      mean[r] /= m;
      p.mu(r, k) = mean[r];
    }

    Tensor cov = Tensor::matrix(d, d);
    for (std::int64_t i = 0; i < n; ++i) {
      if (label[static_cast<std::size_t>(i)] != k) continue;
      for (std::int64_t r = 0; r < d; ++r) {
        const double dr = data.points(i, r) - mean[r];
        for (std::int64_t c = r; c < d; ++c)
          cov(r, c) += dr * (data.points(i, c) - mean[c]);
      }
    }
    for (std::int64_t r = 0; r < d; ++r)
      for (std::int64_t c = r; c < d; ++c) {
        cov(r, c) /= m;
        cov(c, r) = cov(r, c);
      }
    // intended scatter is cov + eps I, so the raw slice is sqrt(cov)
    p.sigma_raw.push_back(sym_sqrt_psd(cov));
  }
  return p;
}

}  // namespace palmkit
