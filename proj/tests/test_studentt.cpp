#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "palmkit/errors.hpp"
#include "palmkit/problem/grad_check.hpp"
#include "palmkit/rng/philox.hpp"
#include "palmkit/studentt/io.hpp"
#include "palmkit/studentt/sample.hpp"
#include "palmkit/studentt/special.hpp"
#include "palmkit/studentt/tmm.hpp"

using namespace palmkit;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEulerGamma = 0.57721566490153286061;

TmmParams random_params(std::uint64_t seed, std::int64_t K, std::int64_t d,
                        double eps = 1e-3, double scale = 1.0) {
  Rng r(seed, "params");
  Rng ra = r.stream("alpha"), rn = r.stream("nu"), rm = r.stream("mu"),
      rs = r.stream("sigma");
  TmmParams p;
  p.K = K;
  p.d = d;
  p.eps = eps;
  p.alpha_raw = Tensor::vector(K);
  p.nu_raw = Tensor::vector(K);
  p.mu = Tensor::matrix(d, K);
  for (std::int64_t k = 0; k < K; ++k) {
    p.alpha_raw[k] = scale * ra.normal();
    p.nu_raw[k] = 1.0 + std::abs(rn.normal());
    for (std::int64_t r2 = 0; r2 < d; ++r2) p.mu(r2, k) = 2.0 * rm.normal();
    Tensor s = Tensor::matrix(d, d);
    for (std::int64_t i = 0; i < d; ++i)
      for (std::int64_t j = i; j < d; ++j) {
        const double v = scale * rs.normal() + (i == j ? 1.5 : 0.0);
        s(i, j) = v;
        s(j, i) = v;
      }
    p.sigma_raw.push_back(std::move(s));
  }
  return p;
}

Dataset random_dataset(std::uint64_t seed, std::int64_t n, std::int64_t d) {
  Rng r(seed, "data");
  Dataset out;
  out.n = n;
  out.d = d;
  out.points = Tensor::matrix(n, d);
  for (std::int64_t i = 0; i < out.points.size(); ++i)
    out.points[i] = 2.0 * r.normal();
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

SpdFactor identity_factor(std::int64_t d) {
  return cholesky_spd(Tensor::identity(d));
}

}  // namespace

// ---------------------------------------------------------------------------
// special functions
// ---------------------------------------------------------------------------

TEST_CASE("lgamma agrees with the libm implementation") {
  Rng r(17, "lg");
  for (int t = 0; t < 2000; ++t) {
    const double x = 1e-3 + 200.0 * r.uniform();
    const double mine = lgamma_pos(x);
    const double ref = std::lgamma(x);
    CHECK(std::abs(mine - ref) <= 5e-13 * std::max(1.0, std::abs(ref)));
  }
  CHECK(std::abs(lgamma_pos(1.0)) <= 1e-14);
  CHECK(std::abs(lgamma_pos(2.0)) <= 1e-14);
  CHECK(std::abs(lgamma_pos(0.5) - 0.5 * std::log(kPi)) <= 1e-14);
  CHECK_THROWS_AS(lgamma_pos(0.0), ConfigError);
  CHECK_THROWS_AS(lgamma_pos(-1.0), ConfigError);
}

TEST_CASE("digamma satisfies the recurrence psi(x+1) = psi(x) + 1/x") {
  Rng r(18, "dg");
  for (int t = 0; t < 1000; ++t) {
    const double x = 50.0 * r.uniform_pos();
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-12);
  }
}

TEST_CASE("digamma matches frozen high-precision values") {
  CHECK(std::abs(digamma(1.0) + kEulerGamma) <= 1e-12);
  // psi(1/2) = -gamma - 2 log 2
  CHECK(std::abs(digamma(0.5) - (-1.9635100260214234794)) <= 1e-12);
  const double large = digamma(1e6) - std::log(1e6);
  CHECK(large < 0.0);
  CHECK(large > -1e-6);
  CHECK_THROWS_AS(digamma(0.0), ConfigError);
  CHECK_THROWS_AS(digamma(-3.0), ConfigError);
}

// ---------------------------------------------------------------------------
// reparametrization
// ---------------------------------------------------------------------------

TEST_CASE("apply_trafo maps the zero parameters to uniform/floor/identity") {
  TmmParams p;
  p.K = 4;
  p.d = 2;
  p.eps = 0.1;
  p.alpha_raw = Tensor::vector(4);
  p.nu_raw = Tensor::vector(4);
  p.mu = Tensor::matrix(2, 4);
  for (int k = 0; k < 4; ++k) p.sigma_raw.push_back(Tensor::matrix(2, 2));
  p.eps = 0.1;
  ConstrainedParams c = apply_trafo(p);
  for (int k = 0; k < 4; ++k) {
    CHECK(c.alpha[k] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(c.nu[k] == 0.1);
  }
  p.eps = 1.0;
  c = apply_trafo(p);
  CHECK(max_abs_diff(c.sigma[0], Tensor::identity(2)) == 0.0);
}

TEST_CASE("apply_trafo keeps the simplex and the eigenvalue floors") {
  Rng r(21, "trafo");
  for (int t = 0; t < 10000; ++t) {
    const std::int64_t d = 2 + (t % 2);
    const double mag = std::pow(10.0, 4.0 * r.uniform());  // up to 1e4
    TmmParams p = random_params(1000 + t, 3, d, 1e-3, 1.0);
    for (Tensor& s : p.sigma_raw)
      for (std::int64_t i = 0; i < s.size(); ++i) s[i] *= mag;
    for (std::int64_t k = 0; k < 3; ++k) p.alpha_raw[k] *= 10.0;
    ConstrainedParams c = apply_trafo(p);
    double sum = 0.0;
    for (std::int64_t k = 0; k < 3; ++k) {
      CHECK(c.alpha[k] >= 0.0);
      sum += c.alpha[k];
      CHECK(c.nu[k] >= p.eps);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (const Tensor& s : c.sigma) {
      const SymEigen e = sym_eigen(s);
      CHECK(e.values[d - 1] >= p.eps - 1e-10);
    }
  }
}

// ---------------------------------------------------------------------------
// density
// ---------------------------------------------------------------------------

TEST_CASE("standard cauchy peak is log(1/pi)") {
  const SpdFactor f = identity_factor(1);
  const double x = 0.0, mu = 0.0;
  const double lp = student_t_logpdf(&x, 1, 1.0, &mu, f);
  CHECK(std::abs(lp - std::log(1.0 / kPi)) <= 1e-14);
}

TEST_CASE("large-nu density approaches the standard normal") {
  const SpdFactor f = identity_factor(1);
  const double x = 1.0, mu = 0.0;
  const double lp = student_t_logpdf(&x, 1, 1e6, &mu, f);
  const double normal = -0.5 - 0.5 * std::log(2.0 * kPi);
  CHECK(std::abs(lp - normal) <= 1e-4);
}

TEST_CASE("2-d density integrates to one") {
  Rng r(31, "quad");
  Tensor base = Tensor::matrix(2, 2);
  for (std::int64_t i = 0; i < 4; ++i) base[i] = r.normal();
  Tensor sigma = matmul_tn(base, base);
  sigma(0, 0) += 0.5;
  sigma(1, 1) += 0.5;
  const SpdFactor f = cholesky_spd(sigma);
  const double nu = 4.0;
  const double mu[2] = {0.3, -0.2};

  const double h = 0.06, radius = 60.0;
  const std::int64_t m = static_cast<std::int64_t>(2.0 * radius / h);
  double integral = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    const double x0 = -radius + (static_cast<double>(i) + 0.5) * h;
    for (std::int64_t j = 0; j < m; ++j) {
      const double pt[2] = {x0, -radius + (static_cast<double>(j) + 0.5) * h};
      integral += std::exp(student_t_logpdf(pt, 2, nu, mu, f));
    }
  }
  integral *= h * h;
  CHECK(std::abs(integral - 1.0) <= 1e-3);
}

// ---------------------------------------------------------------------------
// mixture objective
// ---------------------------------------------------------------------------

TEST_CASE("single-component nll ignores the weight logit") {
  Dataset data = random_dataset(40, 12, 2);
  TmmParams p = random_params(41, 1, 2);
  const double base = mm_nll(p, data);
  p.alpha_raw[0] = 7.25;
  CHECK(mm_nll(p, data) == base);

  // equals minus the mean logpdf
  ConstrainedParams c = apply_trafo(p);
  double acc = 0.0;
  for (std::int64_t i = 0; i < data.n; ++i)
    acc += student_t_logpdf(data.points.data() + i * data.d, data.d, c.nu[0],
                            c.mu.data(), c.factor[0]);
  CHECK(std::abs(base - (-acc / static_cast<double>(data.n))) <= 1e-13);
}

TEST_CASE("cauchy at its mode gives nll log(pi)") {
  Dataset data;
  data.n = 1;
  data.d = 1;
  data.points = Tensor::matrix(1, 1);
  TmmParams p;
  p.K = 1;
  p.d = 1;
  p.eps = 0.5;
  p.alpha_raw = Tensor::vector(1);
  p.nu_raw = Tensor::vector(1);
  p.nu_raw[0] = std::sqrt(1.0 - p.eps);  // nu = 1
  p.mu = Tensor::matrix(1, 1);
  Tensor s = Tensor::matrix(1, 1);
  s(0, 0) = std::sqrt(1.0 - p.eps);  // scatter = 1
  p.sigma_raw.push_back(s);
  CHECK(std::abs(mm_nll(p, data) - std::log(kPi)) <= 1e-14);
}

TEST_CASE("nll matches a direct non-log-space evaluation") {
  Dataset data = random_dataset(50, 20, 2);
  TmmParams p = random_params(51, 3, 2);
  ConstrainedParams c = apply_trafo(p);
  double naive = 0.0;
  for (std::int64_t i = 0; i < data.n; ++i) {
    double mix = 0.0;
    for (std::int64_t k = 0; k < 3; ++k)
      mix += c.alpha[k] *
             std::exp(student_t_logpdf(data.points.data() + i * data.d, 2,
                                       c.nu[k], c.mu.data() + 0, c.factor[k]));
    naive += std::log(mix);
  }
  // note: mu column k has stride K in the d x K layout
  naive = 0.0;
  std::vector<double> muk(2);
  for (std::int64_t i = 0; i < data.n; ++i) {
    double mix = 0.0;
    for (std::int64_t k = 0; k < 3; ++k) {
      for (std::int64_t r = 0; r < 2; ++r) muk[static_cast<std::size_t>(r)] = c.mu(r, k);
      mix += c.alpha[k] *
             std::exp(student_t_logpdf(data.points.data() + i * data.d, 2,
                                       c.nu[k], muk.data(), c.factor[k]));
    }
    naive += std::log(mix);
  }
  naive = -naive / static_cast<double>(data.n);
  CHECK(std::abs(mm_nll(p, data) - naive) <= 1e-10);
}

TEST_CASE("nll never drops below the peak-density floor") {
  const std::int64_t d = 2, K = 3;
  const double eps = 1e-3;
  Dataset data = random_dataset(60, 20, d);
  // peak density bound: (eps*pi)^{-d/2} * sup_nu Gamma((d+nu)/2)/(Gamma(nu/2) nu^{d/2})
  double rmax = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double nu = std::pow(10.0, -3.0 + 9.0 * i / 4000.0);
    const double r = lgamma_pos(0.5 * (d + nu)) - lgamma_pos(0.5 * nu) -
                     0.5 * d * std::log(nu);
    rmax = std::max(rmax, r);
  }
  const double log_c = rmax - 0.5 * d * std::log(kPi) - 0.5 * d * std::log(eps);
  Rng r(61, "floor");
  for (int t = 0; t < 10000; ++t) {
    TmmParams p = random_params(9000 + t, K, d, eps, 1.0 + 2.0 * r.uniform());
    const double nll = mm_nll(p, data);
    CHECK(std::isfinite(nll));
    CHECK(nll >= -log_c - 1e-9);
  }
}

// ---------------------------------------------------------------------------
// gradients
// ---------------------------------------------------------------------------

TEST_CASE("single-component weight gradient is exactly zero") {
  Dataset data = random_dataset(70, 10, 2);
  TmmParams p = random_params(71, 1, 2);
  Tensor g = mm_nll_grad(p, data, TmmBlock::alpha);
  CHECK(g[0] == 0.0);
}

TEST_CASE("center gradient vanishes by symmetry on a mirrored two-point set") {
  Dataset data;
  data.n = 2;
  data.d = 2;
  data.points = Tensor::matrix(2, 2);
  data.points(0, 0) = 1.25;
  data.points(0, 1) = -0.5;
  data.points(1, 0) = -1.25;
  data.points(1, 1) = 0.5;
  TmmParams p = random_params(72, 1, 2);
  p.mu = Tensor::matrix(2, 1);  // mu = 0
  Tensor g = mm_nll_grad(p, data, TmmBlock::mu);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("every block gradient matches central finite differences") {
  Dataset data = random_dataset(80, 10, 3);
  TmmParams p = random_params(81, 2, 3);
  TmmProblem prob(data, 2, p.eps);
  const auto idx = all_indices(data.n);
  GradCheckResult res =
      check_gradients(prob, tmm_to_blockvec(p), idx, 0, 0, 1e-5);
  CHECK(res.max_rel_err <= 1e-5);
}

TEST_CASE("gradients match finite differences on 50 seeded instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::int64_t d = 1 + static_cast<std::int64_t>(seed % 3);
    const std::int64_t K = 1 + static_cast<std::int64_t>(seed % 3);
    const std::int64_t n = 8 + static_cast<std::int64_t>(seed % 13);
    Dataset data = random_dataset(300 + seed, n, d);
    TmmParams p = random_params(400 + seed, K, d);
    TmmProblem prob(data, K, p.eps);
    GradCheckResult res = check_gradients(prob, tmm_to_blockvec(p),
                                          all_indices(n), seed, 0, 1e-5);
    CHECK(res.max_rel_err <= 1e-5);
  }
}

TEST_CASE("the checker flags a corrupted analytic block") {
  Dataset data = random_dataset(90, 10, 2);
  TmmParams p = random_params(91, 2, 2);
  TmmProblem prob(data, 2, p.eps);
  GradCheckResult res = check_gradients(prob, tmm_to_blockvec(p),
                                        all_indices(data.n), 0, 0, 1e-5,
                                        1.01, 2 /* mu block */);
  CHECK(res.max_rel_err > 1e-4);
  CHECK(res.worst_block == 2);
}

TEST_CASE("gradient slopes along random segments stay bounded") {
  Dataset data = random_dataset(100, 10, 2);
  TmmProblem prob(data, 2, 1e-3);
  const auto idx = all_indices(data.n);
  Rng r(101, "segments");

  const auto random_point = [&](Rng& rr) {
    TmmParams p = random_params(rr.next_u64() & 0xffff, 2, 2);
    return tmm_to_blockvec(p);
  };
  double pilot_max = 0.0;
  double rest_max = 0.0;
  for (int seg = 0; seg < 100; ++seg) {
    const BlockVec a = random_point(r);
    const BlockVec b = random_point(r);
    BlockVec prev_g = prob.grad_all_batch(a, idx);
    BlockVec prev_x = a;
    for (int t = 1; t < 100; ++t) {
      const double u = static_cast<double>(t) / 99.0;
      BlockVec x = scale(a, 1.0 - u);
      axpy_inplace(x, u, b);
      BlockVec g = prob.grad_all_batch(x, idx);
      const double num = std::sqrt(squared_norm(sub(g, prev_g)));
      const double den = std::sqrt(squared_norm(sub(x, prev_x)));
      const double slope = num / den;
      if (seg < 20)
        pilot_max = std::max(pilot_max, slope);
      else
        rest_max = std::max(rest_max, slope);
      prev_g = std::move(g);
      prev_x = std::move(x);
    }
  }
  CHECK(pilot_max > 0.0);
  CHECK(rest_max <= 10.0 * pilot_max);
}

// ---------------------------------------------------------------------------
// problem adapter and cache
// ---------------------------------------------------------------------------

TEST_CASE("problem adapter matches the free functions bitwise") {
  Dataset data = random_dataset(110, 14, 2);
  TmmParams p = random_params(111, 3, 2);
  TmmProblem prob(data, 3, p.eps);
  const auto idx = all_indices(data.n);
  const BlockVec x = tmm_to_blockvec(p);

  CHECK(prob.eval_batch(x, idx) == mm_nll(p, data));
  CHECK(max_abs_diff(prob.grad_block_batch(x, 0, idx),
                     mm_nll_grad(p, data, TmmBlock::alpha)) == 0.0);
  CHECK(max_abs_diff(prob.grad_block_batch(x, 1, idx),
                     mm_nll_grad(p, data, TmmBlock::nu)) == 0.0);
  CHECK(max_abs_diff(prob.grad_block_batch(x, 2, idx),
                     mm_nll_grad(p, data, TmmBlock::mu)) == 0.0);
  CHECK(max_abs_diff(prob.grad_block_batch(x, 3, idx),
                     mm_nll_grad(p, data, TmmBlock::sigma)) == 0.0);

  BlockVec g;
  const double nll = prob.eval_with_grad_all(x, idx, g);
  CHECK(nll == mm_nll(p, data));
  BlockVec g2 = prob.grad_all_batch(x, idx);
  for (std::size_t j = 0; j < 4; ++j)
    CHECK(max_abs_diff(g.value(j), g2.value(j)) == 0.0);
}

TEST_CASE("solve cache never changes results under interleaved points") {
  Dataset data = random_dataset(120, 16, 2);
  TmmParams p1 = random_params(121, 2, 2);
  TmmParams p2 = p1;
  p2.mu(0, 0) += 0.125;  // different mu -> different pair cache key
  TmmParams p3 = p1;
  p3.alpha_raw[1] += 0.5;  // alpha-only change -> pair cache hit
  TmmProblem cached(data, 2, p1.eps);
  const auto idx = all_indices(data.n);

  const BlockVec x1 = tmm_to_blockvec(p1);
  const BlockVec x2 = tmm_to_blockvec(p2);
  const BlockVec x3 = tmm_to_blockvec(p3);
  // churn the cache in an adversarial order
  std::vector<const BlockVec*> order = {&x1, &x2, &x1, &x3, &x2, &x3, &x1};
  for (const BlockVec* x : order) {
    TmmProblem fresh(data, 2, p1.eps);
    CHECK(cached.eval_batch(*x, idx) == fresh.eval_batch(*x, idx));
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(max_abs_diff(cached.grad_block_batch(*x, j, idx),
                         fresh.grad_block_batch(*x, j, idx)) == 0.0);
  }

  // sub-batches key separately from the full batch
  const std::vector<std::int64_t> sub = {0, 3, 5, 11};
  TmmProblem fresh(data, 2, p1.eps);
  CHECK(cached.eval_batch(x1, sub) == fresh.eval_batch(x1, sub));
  CHECK(cached.eval_batch(x1, idx) == fresh.eval_batch(x1, idx));
}

TEST_CASE("problem adapter rejects malformed input") {
  Dataset data = random_dataset(130, 10, 2);
  CHECK_THROWS_AS(TmmProblem(data, 0), ConfigError);
  TmmProblem prob(data, 2, 1e-3);
  TmmParams p = random_params(131, 2, 2);
  const BlockVec x = tmm_to_blockvec(p);
  const std::vector<std::int64_t> empty;
  CHECK_THROWS_AS(prob.eval_batch(x, empty), ConfigError);
  Dataset wrong = random_dataset(132, 10, 3);
  CHECK_THROWS_AS(mm_nll(p, wrong), ShapeError);
}

// ---------------------------------------------------------------------------
// sampling, ground truth, initialization
// ---------------------------------------------------------------------------

TEST_CASE("near-normal component reproduces mean and covariance") {
  ConstrainedParams truth;
  truth.K = 1;
  truth.d = 2;
  truth.alpha = Tensor::vector(1);
  truth.alpha[0] = 1.0;
  truth.nu = Tensor::vector(1);
  truth.nu[0] = 1e6;
  truth.mu = Tensor::matrix(2, 1);
  truth.sigma.push_back(Tensor::identity(2));
  truth.factor.push_back(identity_factor(2));

  Dataset data = sample_mm(Rng(140), truth, 100000);
  double mean[2] = {0.0, 0.0};
  for (std::int64_t i = 0; i < data.n; ++i) {
    mean[0] += data.points(i, 0);
    mean[1] += data.points(i, 1);
  }
  mean[0] /= static_cast<double>(data.n);
  mean[1] /= static_cast<double>(data.n);
  CHECK(std::abs(mean[0]) <= 0.02);
  CHECK(std::abs(mean[1]) <= 0.02);
  double cov[3] = {0.0, 0.0, 0.0};  // xx, yy, xy
  for (std::int64_t i = 0; i < data.n; ++i) {
    const double a = data.points(i, 0) - mean[0];
    const double b = data.points(i, 1) - mean[1];
    cov[0] += a * a;
    cov[1] += b * b;
    cov[2] += a * b;
  }
  for (double& c : cov) c /= static_cast<double>(data.n);
  CHECK(std::abs(cov[0] - 1.0) <= 0.05);
  CHECK(std::abs(cov[1] - 1.0) <= 0.05);
  CHECK(std::abs(cov[2]) <= 0.05);
}

TEST_CASE("degenerate weights route every draw to the first component") {
  ConstrainedParams truth;
  truth.K = 2;
  truth.d = 1;
  truth.alpha = Tensor::vector(2);
  truth.alpha[0] = 1.0;
  truth.nu = Tensor::vector(2);
  truth.nu[0] = 50.0;
  truth.nu[1] = 50.0;
  truth.mu = Tensor::matrix(1, 2);
  truth.mu(0, 0) = 100.0;
  truth.mu(0, 1) = -100.0;
  truth.sigma.push_back(Tensor::identity(1));
  truth.sigma.push_back(Tensor::identity(1));
  truth.factor.push_back(identity_factor(1));
  truth.factor.push_back(identity_factor(1));
  Dataset data = sample_mm(Rng(141), truth, 2000);
  for (std::int64_t i = 0; i < data.n; ++i) CHECK(data.points(i, 0) > 0.0);
}

TEST_CASE("component frequencies track the weights") {
  ConstrainedParams truth;
  truth.K = 2;
  truth.d = 1;
  truth.alpha = Tensor::vector(2);
  truth.alpha[0] = 0.3;
  truth.alpha[1] = 0.7;
  truth.nu = Tensor::vector(2);
  truth.nu[0] = 50.0;
  truth.nu[1] = 50.0;
  truth.mu = Tensor::matrix(1, 2);
  truth.mu(0, 0) = 50.0;
  truth.mu(0, 1) = -50.0;
  truth.sigma.push_back(Tensor::identity(1));
  truth.sigma.push_back(Tensor::identity(1));
  truth.factor.push_back(identity_factor(1));
  truth.factor.push_back(identity_factor(1));
  Dataset data = sample_mm(Rng(142), truth, 100000);
  std::int64_t first = 0;
  for (std::int64_t i = 0; i < data.n; ++i)
    if (data.points(i, 0) > 0.0) ++first;
  const double freq = static_cast<double>(first) / static_cast<double>(data.n);
  CHECK(std::abs(freq - 0.3) <= 0.01);
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  ConstrainedParams truth = generate_ground_truth(Rng(143), 3, 2);
  Dataset a = sample_mm(Rng(144), truth, 500);
  Dataset b = sample_mm(Rng(144), truth, 500);
  CHECK(max_abs_diff(a.points, b.points) == 0.0);
  Dataset c = sample_mm(Rng(145), truth, 500);
  CHECK(max_abs_diff(a.points, c.points) > 0.0);
}

TEST_CASE("ground truth satisfies its construction ranges") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::int64_t K = 1 + static_cast<std::int64_t>(seed % 5);
    const std::int64_t d = 1 + static_cast<std::int64_t>(seed % 4);
    ConstrainedParams t = generate_ground_truth(Rng(seed), K, d);
    double sum = 0.0;
    for (std::int64_t k = 0; k < K; ++k) {
      CHECK(t.alpha[k] > 0.0);
      sum += t.alpha[k];
      CHECK(t.nu[k] >= 1.0);
      CHECK(t.nu[k] <= 100.0);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    for (const Tensor& s : t.sigma) {
      const SymEigen e = sym_eigen(s);
      CHECK(e.values[d - 1] >= 1.0 - 1e-9);
    }
  }
}

TEST_CASE("single-class initialization recovers dataset moments") {
  Dataset data = random_dataset(150, 40, 2);
  TmmParams p = init_params(data, 1, Rng(151), 1e-3);
  double mean[2] = {0.0, 0.0};
  for (std::int64_t i = 0; i < data.n; ++i) {
    mean[0] += data.points(i, 0);
    mean[1] += data.points(i, 1);
  }
  mean[0] /= static_cast<double>(data.n);
  mean[1] /= static_cast<double>(data.n);
  CHECK(p.mu(0, 0) == mean[0]);
  CHECK(p.mu(1, 0) == mean[1]);

  ConstrainedParams c = apply_trafo(p);
  CHECK(c.alpha[0] == 1.0);
  CHECK(std::abs(c.nu[0] - 3.0) <= 1e-12);

  // scatter round-trip: sqrt(cov)^2 + eps I == cov + eps I
  Tensor cov = Tensor::matrix(2, 2);
  for (std::int64_t i = 0; i < data.n; ++i)
    for (std::int64_t r = 0; r < 2; ++r)
      for (std::int64_t cc = 0; cc < 2; ++cc)
        cov(r, cc) += (data.points(i, r) - mean[r]) *
                      (data.points(i, cc) - mean[cc]);
  for (std::int64_t i = 0; i < 4; ++i) cov[i] /= static_cast<double>(data.n);
  cov(0, 0) += 1e-3;
  cov(1, 1) += 1e-3;
  CHECK(max_abs_diff(c.sigma[0], cov) <= 1e-8);
}

TEST_CASE("initialization is deterministic and repairs empty classes") {
  const std::int64_t K = 7, d = 1, n = 14;
  Dataset data = random_dataset(160, n, d);

  // find a seed whose random assignment leaves some class empty
  std::uint64_t bad_seed = 0;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 2000 && !found; ++seed) {
    Rng assign = Rng(seed).stream("assign");
    std::vector<int> count(K, 0);
    for (std::int64_t i = 0; i < n; ++i) ++count[static_cast<std::size_t>(assign.uniform_int(K))];
    for (int c : count)
      if (c == 0) {
        bad_seed = seed;
        found = true;
        break;
      }
  }
  REQUIRE(found);

  TmmParams p = init_params(data, K, Rng(bad_seed), 1e-3);
  ConstrainedParams c = apply_trafo(p);
  double sum = 0.0;
  for (std::int64_t k = 0; k < K; ++k) {
    CHECK(c.alpha[k] > 0.0);  // every class owns at least one sample
    sum += c.alpha[k];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);

  TmmParams q = init_params(data, K, Rng(bad_seed), 1e-3);
  CHECK(max_abs_diff(p.mu, q.mu) == 0.0);
  CHECK(max_abs_diff(p.alpha_raw, q.alpha_raw) == 0.0);

  CHECK_THROWS_AS(init_params(data, 8, Rng(0), 1e-3), ConfigError);
}

// ---------------------------------------------------------------------------
// file formats
// ---------------------------------------------------------------------------

TEST_CASE("binary dataset round-trips bitwise") {
  Dataset data = random_dataset(170, 23, 3);
  const std::string path = "tmp_dataset_roundtrip.tmmd";
  save_dataset(path, data);
  Dataset back = load_dataset(path);
  CHECK(back.n == data.n);
  CHECK(back.d == data.d);
  CHECK(max_abs_diff(back.points, data.points) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("malformed binary datasets raise format errors with offsets") {
  Dataset data = random_dataset(171, 5, 2);
  const std::string path = "tmp_dataset_bad.tmmd";
  save_dataset(path, data);

  // corrupt the magic
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    REQUIRE(f != nullptr);
    std::fputc('X', f);
    std::fclose(f);
    try {
      load_dataset(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() == 0);
    }
  }
  // truncate inside the sample payload
  save_dataset(path, data);
  {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    char buf[32];
    const std::size_t got = std::fread(buf, 1, sizeof buf, f);
    std::fclose(f);
    f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fwrite(buf, 1, got, f);
    std::fclose(f);
    CHECK_THROWS_AS(load_dataset(path), FormatError);
  }
  std::remove(path.c_str());
}

TEST_CASE("csv import parses rows and rejects ragged input") {
  const std::string path = "tmp_dataset.csv";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("1.5,2.5\n-0.25,3e2\n", f);
    std::fclose(f);
  }
  Dataset data = load_dataset_csv(path);
  CHECK(data.n == 2);
  CHECK(data.d == 2);
  CHECK(data.points(0, 0) == 1.5);
  CHECK(data.points(1, 1) == 300.0);

  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("1.5,2.5\n-0.25\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_dataset_csv(path), FormatError);
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("1.5,abc\n", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_dataset_csv(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("parameter json round-trips bitwise") {
  TmmParams p = random_params(180, 3, 2, 2e-3);
  const std::string path = "tmp_params_roundtrip.json";
  save_params(path, p);
  TmmParams q = load_params(path);
  CHECK(q.K == p.K);
  CHECK(q.d == p.d);
  CHECK(q.eps == p.eps);
  CHECK(max_abs_diff(q.alpha_raw, p.alpha_raw) == 0.0);
  CHECK(max_abs_diff(q.nu_raw, p.nu_raw) == 0.0);
  CHECK(max_abs_diff(q.mu, p.mu) == 0.0);
  for (std::int64_t k = 0; k < p.K; ++k)
    CHECK(max_abs_diff(q.sigma_raw[static_cast<std::size_t>(k)],
                       p.sigma_raw[static_cast<std::size_t>(k)]) == 0.0);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_params("does_not_exist.json"), Error);
}
