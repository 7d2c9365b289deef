#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "palmkit/errors.hpp"
#include "palmkit/estimators/estimators.hpp"
#include "palmkit/optim/solver.hpp"
#include "palmkit/problem/quadratic.hpp"

using namespace palmkit;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// all size-k subsets of {0..n-1}, lexicographic
void enumerate_subsets(std::int64_t n, std::int64_t k,
                       std::vector<std::vector<std::int64_t>>& out) {
  std::vector<std::int64_t> cur(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  for (;;) {
    out.push_back(cur);
    std::int64_t i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < k; ++j)
      cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
}

BlockVec random_point(const FiniteSumProblem& p, std::uint64_t seed) {
  Rng r(seed, "pt");
  BlockVec x = p.make_point();
  for (std::size_t j = 0; j < x.block_count(); ++j)
    for (std::int64_t i = 0; i < x.value(j).size(); ++i)
      x.value(j)[i] = r.normal();
  return x;
}

}  // namespace

TEST_CASE("draw_minibatch is sorted, unique, and uniform over subsets") {
  Rng stream(123, "batch");
  // n=4, b=2: six subsets, each with probability 1/6
  std::vector<int> counts(6, 0);
  auto subset_id = [](const std::vector<std::int64_t>& s) {
    if (s[0] == 0 && s[1] == 1) return 0;
    if (s[0] == 0 && s[1] == 2) return 1;
    if (s[0] == 0 && s[1] == 3) return 2;
    if (s[0] == 1 && s[1] == 2) return 3;
    if (s[0] == 1 && s[1] == 3) return 4;
    return 5;
  };
  const int reps = 60000;
  for (int i = 0; i < reps; ++i) {
    const auto s = draw_minibatch(stream, 4, 2);
    REQUIRE(s.size() == 2);
    REQUIRE(s[0] < s[1]);
    ++counts[static_cast<std::size_t>(subset_id(s))];
  }
  for (int c : counts)
    CHECK(std::abs(c / static_cast<double>(reps) - 1.0 / 6.0) < 0.01);
}

TEST_CASE("draw_minibatch with b=n returns the full ascending index set") {
  Rng stream(5, "batch");
  const auto s = draw_minibatch(stream, 17, 17);
  REQUIRE(s.size() == 17);
  for (std::int64_t i = 0; i < 17; ++i) CHECK(s[static_cast<std::size_t>(i)] == i);
  CHECK_THROWS_AS(draw_minibatch(stream, 4, 5), ConfigError);
  CHECK_THROWS_AS(draw_minibatch(stream, 4, 0), ConfigError);
}

TEST_CASE("sgd estimate averaged over all subsets equals the full gradient") {
  const QuadraticFiniteSum p(6, {3}, 42);
  const BlockVec x = random_point(p, 1);
  const Tensor full = full_gradient(p, x, 0);

  std::vector<std::vector<std::int64_t>> subsets;
  enumerate_subsets(6, 3, subsets);
  REQUIRE(subsets.size() == 20);

  Tensor mean(full.shape());
  for (const auto& s : subsets) {
    const Tensor g = sgd_estimate(p, x, 0, s);
    for (std::int64_t i = 0; i < g.size(); ++i) mean[i] += g[i];
  }
  for (std::int64_t i = 0; i < mean.size(); ++i)
    mean[i] /= static_cast<double>(subsets.size());
  CHECK(max_abs_diff(mean, full) <= 1e-12);
}

TEST_CASE("sarah step 0 returns the exact full gradient") {
  const QuadraticFiniteSum p(8, {4}, 7);
  const BlockVec x = random_point(p, 2);
  SarahState st;
  Rng stream(9, "b");
  const auto batch = draw_minibatch(stream, 8, 3);
  const Tensor est = sarah_step(st, p, 0, x, batch, /*refresh=*/false);
  const Tensor full = full_gradient(p, x, 0);
  CHECK(max_abs_diff(est, full) == 0.0);  // same code path, bitwise
  CHECK(st.step == 1);
}

TEST_CASE("sarah with b=n collapses to the full gradient at every step") {
  const QuadraticFiniteSum p(5, {3, 2}, 11);
  const auto batch = all_indices(5);
  for (std::size_t block = 0; block < 2; ++block) {
    SarahState st;
    for (int k = 0; k < 20; ++k) {
      const BlockVec x = random_point(p, 100 + static_cast<std::uint64_t>(k));
      const Tensor est = sarah_step(st, p, block, x, batch, false);
      const Tensor full = full_gradient(p, x, block);
      CHECK(max_abs_diff(est, full) <= 1e-14);
    }
  }
}

TEST_CASE("sarah recursion is unbiased over exhaustive minibatch enumeration") {
  // mean over all C(4,2) batches of the recursive estimate equals
  // grad H(z1) - grad H(z0) + previous estimate
  const QuadraticFiniteSum p(4, {3}, 13);
  const BlockVec z0 = random_point(p, 3);
  BlockVec z1 = z0;
  axpy_inplace(z1, 0.3, random_point(p, 4));

  SarahState base;
  const auto full_batch = all_indices(4);
  const Tensor est0 = sarah_step(base, p, 0, z0, full_batch, true);

  std::vector<std::vector<std::int64_t>> subsets;
  enumerate_subsets(4, 2, subsets);
  REQUIRE(subsets.size() == 6);

  Tensor mean(est0.shape());
  for (const auto& s : subsets) {
    SarahState st = base;  // clone the post-step-0 state
    const Tensor est = sarah_step(st, p, 0, z1, s, false);
    for (std::int64_t i = 0; i < est.size(); ++i) mean[i] += est[i];
  }
  for (std::int64_t i = 0; i < mean.size(); ++i)
    mean[i] /= static_cast<double>(subsets.size());

  Tensor expect = full_gradient(p, z1, 0);
  const Tensor g0 = full_gradient(p, z0, 0);
  for (std::int64_t i = 0; i < expect.size(); ++i)
    expect[i] += est0[i] - g0[i];
  CHECK(max_abs_diff(mean, expect) <= 1e-12);
}

TEST_CASE("bernoulli refresh has the advertised frequency") {
  Rng stream(21, "refresh");
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += bernoulli_refresh(stream, 2.0) ? 1 : 0;
  CHECK(std::abs(hits / static_cast<double>(n) - 0.5) < 0.01);
  CHECK_THROWS_AS(bernoulli_refresh(stream, 1.0), ConfigError);
}

TEST_CASE("estimator noise shrinks as spring iterates converge") {
  // empirical mean squared estimator error at epoch 1 vs epoch 20,
  // averaged over 200 seeded runs, must drop by at least 10x
  const QuadraticFiniteSum p(50, {5}, 99);
  std::vector<ProxOp> prox;
  prox.push_back(identity_prox());
  SolverConfig cfg;
  cfg.algorithm = Algorithm::spring;
  cfg.s1 = 1.0;
  cfg.batch_size = 10;
  cfg.sarah_p = 10.0;

  double err_epoch1 = 0.0, err_epoch20 = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    cfg.seed = seed;
    StochasticState st = StochasticState::make(seed, p.block_specs());
    BlockVec x = random_point(p, 7000 + seed);
    for (int epoch = 1; epoch <= 20; ++epoch) {
      for (int s = 0; s < 10; ++s)
        x = spring_step(p, x, st, /*force_full=*/s == 0, prox, cfg);
      if (epoch == 1 || epoch == 20) {
        const Tensor est = st.sarah[0].prev_estimate;
        const Tensor full = full_gradient(p, st.sarah[0].prev_point, 0);
        Tensor d = sub(est, full);
        (epoch == 1 ? err_epoch1 : err_epoch20) += squared_norm(d);
      }
    }
  }
  CHECK(err_epoch20 * 10.0 <= err_epoch1);
}

TEST_CASE("spring steps are deterministic given the seed") {
  const QuadraticFiniteSum p(20, {4, 3}, 5);
  std::vector<ProxOp> prox{identity_prox(), identity_prox()};
  SolverConfig cfg;
  cfg.algorithm = Algorithm::spring;
  cfg.batch_size = 5;
  cfg.seed = 31;

  auto run_once = [&]() {
    StochasticState st = StochasticState::make(cfg.seed, p.block_specs());
    BlockVec x = random_point(p, 8);
    for (int k = 0; k < 25; ++k) x = spring_step(p, x, st, k == 0, prox, cfg);
    return x;
  };
  const BlockVec a = run_once();
  const BlockVec b = run_once();
  for (std::size_t j = 0; j < a.block_count(); ++j)
    CHECK(max_abs_diff(a.value(j), b.value(j)) == 0.0);
}
