#include "palmkit/optim/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "palmkit/errors.hpp"
#include "palmkit/simd/kernels.hpp"

namespace palmkit {

ProxOp identity_prox() {
  ProxOp p;
  p.apply = [](const Tensor& v, double) { return v; };
  p.value = [](const Tensor&) { return 0.0; };
  p.is_identity = true;
  return p;
}

ProxOp l1_prox(double weight) {
  ProxOp p;
  p.apply = [weight](const Tensor& v, double tau) {
    Tensor out(v.shape());
    const double thr = weight / tau;
    for (std::int64_t i = 0; i < v.size(); ++i) {
      const double a = v[i];
      out[i] = (a > thr) ? a - thr : (a < -thr ? a + thr : 0.0);
    }
    return out;
  };
  p.value = [weight](const Tensor& x) {
    double s = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) s += std::abs(x[i]);
    return weight * s;
  };
  p.is_identity = false;
  return p;
}

ProxOp box_prox(double lo, double hi) {
  ProxOp p;
  p.apply = [lo, hi](const Tensor& v, double) {
    Tensor out(v.shape());
    for (std::int64_t i = 0; i < v.size(); ++i)
      out[i] = std::min(hi, std::max(lo, v[i]));
    return out;
  };
  p.value = [](const Tensor&) { return 0.0; };
  p.is_identity = false;
  return p;
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "palm") return Algorithm::palm;
  if (name == "ipalm") return Algorithm::ipalm;
  if (name == "spring") return Algorithm::spring;
  if (name == "ispalm") return Algorithm::ispalm;
  throw ConfigError("unknown algorithm '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::palm: return "palm";
    case Algorithm::ipalm: return "ipalm";
    case Algorithm::spring: return "spring";
    case Algorithm::ispalm: return "ispalm";
  }
  return "?";
}

bool is_stochastic(Algorithm a) {
  return a == Algorithm::spring || a == Algorithm::ispalm;
}

bool is_inertial(Algorithm a) {
  return a == Algorithm::ipalm || a == Algorithm::ispalm;
}

void validate(const SolverConfig& cfg, const FiniteSumProblem& problem) {
  if (!(cfg.s1 > 0.0)) throw ConfigError("s1 must be positive");
  if (!(cfg.lipschitz_floor > 0.0))
    throw ConfigError("lipschitz_floor must be positive");
  if (!(cfg.fd_step_scale > 0.0))
    throw ConfigError("fd_step_scale must be positive");
  if (cfg.epochs < 1) throw ConfigError("epochs must be at least 1");
  if (cfg.steps_per_epoch < 1)
    throw ConfigError("steps_per_epoch must be at least 1");
  if (is_inertial(cfg.algorithm)) {
    if (!(cfg.s2 >= 0.0 && cfg.s2 < 1.0))
      throw ConfigError("s2 must lie in [0, 1)");
    if (cfg.s2 >= 0.5)
      std::fprintf(stderr,
                   "warning: s2 = %g >= 0.5 is outside the provably "
                   "convergent range\n",
                   cfg.s2);
  }
  if (!cfg.fixed_tau.empty()) {
    if (cfg.fixed_tau.size() != problem.block_specs().size())
      throw ConfigError("fixed_tau must have one entry per block");
    for (double t : cfg.fixed_tau)
      if (!(t > 0.0)) throw ConfigError("fixed_tau entries must be positive");
  }
  if (is_stochastic(cfg.algorithm)) {
    const std::int64_t n = problem.sample_count();
    if (cfg.batch_size < 1 || cfg.batch_size > n)
      throw ConfigError("batch_size must lie in [1, n]");
    if (!(cfg.sarah_p > 1.0)) throw ConfigError("sarah_p must exceed 1");
  } else if (cfg.batch_size != 0 && cfg.batch_size != problem.sample_count()) {
    throw ConfigError(
        "batch_size is only meaningful for stochastic algorithms");
  }
}

double inertial_coefficient(std::int64_t k, double s2) {
  if (k < 1) return 0.0;
  const double c = s2 * static_cast<double>(k - 1) / static_cast<double>(k + 2);
  return c > 0.0 ? c : 0.0;
}

double estimate_local_lipschitz(const FiniteSumProblem& problem,
                                const BlockVec& point, std::size_t block,
                                std::span<const std::int64_t> batch,
                                double floor, double fd_step_scale,
                                const Tensor* base_grad) {
  Tensor owned;
  const Tensor* g = base_grad;
  if (!g) {
    owned = problem.grad_block_batch(point, block, batch);
    g = &owned;
  }
  const double gsq = squared_norm(*g);
  if (!(gsq >= 1e-24)) return floor;  // near-zero or non-finite gradient
  const double gn = std::sqrt(gsq);
  const Tensor& xb = point.value(block);
  const double h = fd_step_scale * (1.0 + std::sqrt(squared_norm(xb)));
  const double step = h / gn;

  BlockVec probe = point;
  Tensor pb = xb;
  axpy_inplace(pb, step, *g);
  probe.value(block) = pb;
  Tensor gp = problem.grad_block_batch(probe, block, batch);

  simd::sub(gp.data(), gp.data(), g->data(), gp.size());
  const double l = std::sqrt(squared_norm(gp)) / h;
  if (!std::isfinite(l))
    throw NumericalError("curvature probe produced a non-finite value");
  return l > floor ? l : floor;
}

double generalized_gradient_norm_sq(const BlockVec& x, const BlockVec& grad,
                                    const std::vector<ProxOp>& prox,
                                    const std::vector<double>& tau) {
  double acc = 0.0;
  for (std::size_t j = 0; j < x.block_count(); ++j) {
    if (prox[j].is_identity) {
      acc += squared_norm(grad.value(j));
      continue;
    }
    Tensor v = x.value(j);
    axpy_inplace(v, -1.0 / tau[j], grad.value(j));
    Tensor px = prox[j].apply(v, tau[j]);
    Tensor r = sub(x.value(j), px);
    acc += tau[j] * tau[j] * squared_norm(r);
  }
  return acc;
}

StochasticState StochasticState::make(std::uint64_t seed,
                                      const std::vector<BlockSpec>& specs) {
  StochasticState st;
  Rng root(seed, "solver");
  for (const BlockSpec& s : specs) {
    st.batch_streams.push_back(root.stream("batch/" + s.name));
    st.refresh_streams.push_back(root.stream("refresh/" + s.name));
    st.sarah.emplace_back();
  }
  return st;
}

namespace {

// x_j <- prox_j(anchor - (1/tau) * g), written into work/out
Tensor prox_update(const Tensor& anchor, const Tensor& g, double tau,
                   const ProxOp& prox) {
  Tensor v = anchor;
  axpy_inplace(v, -1.0 / tau, g);
  return prox.apply(v, tau);
}

}  // namespace

BlockVec palm_step(const FiniteSumProblem& problem, const BlockVec& x,
                   const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                   std::vector<double>* tau_out) {
  const std::vector<std::int64_t> idx = all_indices(problem.sample_count());
  BlockVec work = x;
  for (std::size_t j = 0; j < work.block_count(); ++j) {
    Tensor g = problem.grad_block_batch(work, j, idx);
    const double tau =
        cfg.fixed_tau.empty()
            ? cfg.s1 * estimate_local_lipschitz(problem, work, j, idx,
                                                cfg.lipschitz_floor,
                                                cfg.fd_step_scale, &g)
            : cfg.fixed_tau[j];
    if (tau_out) (*tau_out)[j] = tau;
    work.value(j) = prox_update(work.value(j), g, tau, prox[j]);
  }
  return work;
}

BlockVec ipalm_step(const FiniteSumProblem& problem, const BlockVec& x,
                    const BlockVec& x_prev, double alpha, double beta,
                    const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                    std::vector<double>* tau_out) {
  const std::vector<std::int64_t> idx = all_indices(problem.sample_count());
  BlockVec work = x;
  for (std::size_t j = 0; j < work.block_count(); ++j) {
    const Tensor y = extrapolate(x.value(j), x_prev.value(j), alpha);
    work.value(j) = extrapolate(x.value(j), x_prev.value(j), beta);
    Tensor g = problem.grad_block_batch(work, j, idx);
    const double tau =
        cfg.fixed_tau.empty()
            ? cfg.s1 * estimate_local_lipschitz(problem, work, j, idx,
                                                cfg.lipschitz_floor,
                                                cfg.fd_step_scale, &g)
            : cfg.fixed_tau[j];
    if (tau_out) (*tau_out)[j] = tau;
    work.value(j) = prox_update(y, g, tau, prox[j]);
  }
  return work;
}

BlockVec spring_step(const FiniteSumProblem& problem, const BlockVec& x,
                     StochasticState& state, bool force_full,
                     const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                     std::vector<double>* tau_out) {
  const std::int64_t n = problem.sample_count();
  BlockVec work = x;
  for (std::size_t j = 0; j < work.block_count(); ++j) {
    const std::vector<std::int64_t> batch =
        draw_minibatch(state.batch_streams[j], n, cfg.batch_size);
    const bool event = bernoulli_refresh(state.refresh_streams[j], cfg.sarah_p);
    const bool refresh = force_full || event || state.sarah[j].step == 0;
    Tensor g = problem.grad_block_batch(work, j, batch);
    const double tau =
        cfg.fixed_tau.empty()
            ? cfg.s1 * estimate_local_lipschitz(problem, work, j, batch,
                                                cfg.lipschitz_floor,
                                                cfg.fd_step_scale, &g)
            : cfg.fixed_tau[j];
    if (tau_out) (*tau_out)[j] = tau;
    const Tensor est =
        sarah_step(state.sarah[j], problem, j, work, batch, refresh, &g);
    work.value(j) = prox_update(work.value(j), est, tau, prox[j]);
  }
  return work;
}

BlockVec ispalm_step(const FiniteSumProblem& problem, const BlockVec& x,
                     const BlockVec& x_prev, double alpha, double beta,
                     StochasticState& state, bool force_full,
                     const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                     std::vector<double>* tau_out) {
  const std::int64_t n = problem.sample_count();
  BlockVec work = x;
  for (std::size_t j = 0; j < work.block_count(); ++j) {
    const Tensor y = extrapolate(x.value(j), x_prev.value(j), alpha);
    work.value(j) = extrapolate(x.value(j), x_prev.value(j), beta);
    const std::vector<std::int64_t> batch =
        draw_minibatch(state.batch_streams[j], n, cfg.batch_size);
    const bool event = bernoulli_refresh(state.refresh_streams[j], cfg.sarah_p);
    const bool refresh = force_full || event || state.sarah[j].step == 0;
    Tensor g = problem.grad_block_batch(work, j, batch);
    const double tau =
        cfg.fixed_tau.empty()
            ? cfg.s1 * estimate_local_lipschitz(problem, work, j, batch,
                                                cfg.lipschitz_floor,
                                                cfg.fd_step_scale, &g)
            : cfg.fixed_tau[j];
    if (tau_out) (*tau_out)[j] = tau;
    const Tensor est =
        sarah_step(state.sarah[j], problem, j, work, batch, refresh, &g);
    work.value(j) = prox_update(y, est, tau, prox[j]);
  }
  return work;
}

RunResult run(const FiniteSumProblem& problem, const BlockVec& init,
              const std::vector<ProxOp>& prox, const SolverConfig& cfg) {
  validate(cfg, problem);
  if (prox.size() != problem.block_specs().size())
    throw ShapeError("run: one ProxOp per block required");

  const std::vector<std::int64_t> idx = all_indices(problem.sample_count());
  const std::size_t nblocks = problem.block_specs().size();
  bool any_prox = false;
  for (const ProxOp& p : prox) any_prox = any_prox || !p.is_identity;

  RunResult result;
  BlockVec x = init;
  BlockVec x_prev = init;  // convention: x^{-1} = x^0
  StochasticState sto;
  if (is_stochastic(cfg.algorithm))
    sto = StochasticState::make(cfg.seed, problem.block_specs());
  std::vector<double> tau(nblocks, cfg.lipschitz_floor * cfg.s1);

  const auto t0 = std::chrono::steady_clock::now();
  const auto wall = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  double last_finite_obj = 0.0;
  BlockVec grad_buf = problem.make_point();
  const auto record = [&](int epoch) -> bool {
    // full-objective trace; returns false when the run must abort
    TraceRow row;
    row.epoch = epoch;
    row.seed = cfg.seed;
    double obj = 0.0;
    bool finite = true;
    try {
      obj = problem.eval_with_grad_all(x, idx, grad_buf);
      for (std::size_t j = 0; j < x.block_count(); ++j)
        obj += prox[j].value(x.value(j));
      finite = std::isfinite(obj);
    } catch (const NumericalError&) {
      finite = false;
    }
    if (!finite) {
      row.objective = last_finite_obj;
      row.grad_sq_norm = 0.0;
      row.wall_seconds = wall();
      row.status = "numerical_error";
      result.rows.push_back(row);
      result.aborted = true;
      result.message = "non-finite objective at epoch " + std::to_string(epoch);
      return false;
    }
    last_finite_obj = obj;
    row.objective = obj;
    row.grad_sq_norm = any_prox
                           ? generalized_gradient_norm_sq(x, grad_buf, prox, tau)
                           : squared_norm(grad_buf);
    row.wall_seconds = wall();
    result.rows.push_back(row);
    return true;
  };

  if (any_prox) {
    // taus for the epoch-0 generalized residual come from full-batch probes
    if (!cfg.fixed_tau.empty()) {
      tau = cfg.fixed_tau;
    } else {
      const BlockVec grad0 = problem.grad_all_batch(x, idx);
      for (std::size_t j = 0; j < nblocks; ++j) {
        const Tensor& gj = grad0.value(j);
        tau[j] = cfg.s1 * estimate_local_lipschitz(problem, x, j, idx,
                                                   cfg.lipschitz_floor,
                                                   cfg.fd_step_scale, &gj);
      }
    }
  }
  if (!record(0)) {
    result.final_point = x;
    return result;
  }

  std::int64_t k = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    bool failed = false;
    try {
      for (int s = 0; s < cfg.steps_per_epoch; ++s, ++k) {
        const bool force_full = (s == 0);
        switch (cfg.algorithm) {
          case Algorithm::palm:
            x = palm_step(problem, x, prox, cfg, &tau);
            break;
          case Algorithm::ipalm: {
            const double a = inertial_coefficient(k, cfg.s2);
            BlockVec xn = ipalm_step(problem, x, x_prev, a, a, prox, cfg, &tau);
            x_prev = std::move(x);
            x = std::move(xn);
            break;
          }
          case Algorithm::spring:
            x = spring_step(problem, x, sto, force_full, prox, cfg, &tau);
            break;
          case Algorithm::ispalm: {
            const double a = inertial_coefficient(k, cfg.s2);
            BlockVec xn = ispalm_step(problem, x, x_prev, a, a, sto, force_full,
                                      prox, cfg, &tau);
            x_prev = std::move(x);
            x = std::move(xn);
            break;
          }
        }
      }
    } catch (const NumericalError& err) {
      TraceRow row;
      row.epoch = epoch;
      row.seed = cfg.seed;
      row.objective = last_finite_obj;
      row.grad_sq_norm = 0.0;
      row.wall_seconds = wall();
      row.status = "numerical_error";
      result.rows.push_back(row);
      result.aborted = true;
      result.message = err.what();
      failed = true;
    }
    if (failed || !record(epoch)) break;
  }
  result.final_point = std::move(x);
  return result;
}

}  // namespace palmkit
