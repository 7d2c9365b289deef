#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palmkit/estimators/estimators.hpp"
#include "palmkit/optim/prox.hpp"
#include "palmkit/problem/finite_sum.hpp"
#include "palmkit/rng/philox.hpp"

// Block-coordinate proximal solvers over a FiniteSumProblem:
//
//   palm    deterministic proximal alternating linearized minimization
//   ipalm   palm with inertial extrapolation (separate prox anchor y and
//           gradient point z per block)
//   spring  palm with the recursive variance-reduced minibatch estimator
//   ispalm  ipalm with the same estimator evaluated at the z points
//
// Blocks are visited in declaration order.  Step sizes are tau_j = s1 * L_j
// where L_j comes from a finite-difference curvature probe along the
// (estimated) gradient direction; stochastic variants probe the minibatch
// surrogate drawn for the current step.

namespace palmkit {

enum class Algorithm { palm, ipalm, spring, ispalm };

Algorithm algorithm_from_string(const std::string& name);
std::string algorithm_name(Algorithm a);

struct SolverConfig {
  Algorithm algorithm = Algorithm::palm;
  double s1 = 1.0;              // tau_j = s1 * L_j
  double s2 = 0.0;              // inertial scale, [0, 1); warn at >= 0.5
  std::int64_t batch_size = 0;  // stochastic only; 0 means unset
  double sarah_p = 10.0;        // refresh probability 1/p, p > 1
  int epochs = 1;
  int steps_per_epoch = 1;
  double lipschitz_floor = 1e-6;
  double fd_step_scale = 1e-4;  // probe step h = scale * (1 + |x_block|)
  std::uint64_t seed = 0;
  // When non-empty (one entry per block), these step sizes are used directly
  // and the curvature probe is skipped; for problems with known block
  // Lipschitz constants.
  std::vector<double> fixed_tau;
};

bool is_stochastic(Algorithm a);
bool is_inertial(Algorithm a);

// Throws ConfigError on invalid settings; warns (stderr) when s2 >= 0.5.
void validate(const SolverConfig& cfg, const FiniteSumProblem& problem);

// Inertial coefficient for 0-based step k: max(0, s2 * (k-1) / (k+2)).
double inertial_coefficient(std::int64_t k, double s2);

// Directional curvature estimate |grad(x + h g) - grad(x)| / h along the
// normalized batch gradient g, floored at `floor`; gradients below 1e-12
// return the floor.  `base_grad`, when given, must be the batch gradient at
// `point` (it is reused, not recomputed, and saves the probe one gradient
// evaluation).
double estimate_local_lipschitz(const FiniteSumProblem& problem,
                                const BlockVec& point, std::size_t block,
                                std::span<const std::int64_t> batch,
                                double floor, double fd_step_scale = 1e-4,
                                const Tensor* base_grad = nullptr);

// Squared norm of the stacked blockwise residuals
//   tau_j * (x_j - prox_j(x_j - grad_j / tau_j, tau_j));
// with identity proxes this equals the squared gradient norm.
double generalized_gradient_norm_sq(const BlockVec& x, const BlockVec& grad,
                                    const std::vector<ProxOp>& prox,
                                    const std::vector<double>& tau);

// Per-block stochastic state: minibatch / refresh substreams and the
// estimator state.  Streams are derived per block name so adding blocks
// never perturbs other blocks' draws.
struct StochasticState {
  std::vector<Rng> batch_streams;
  std::vector<Rng> refresh_streams;
  std::vector<SarahState> sarah;
  static StochasticState make(std::uint64_t seed,
                              const std::vector<BlockSpec>& specs);
};

// One full pass over the blocks.  tau_out, when non-null, receives the step
// sizes used for each block.
BlockVec palm_step(const FiniteSumProblem& problem, const BlockVec& x,
                   const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                   std::vector<double>* tau_out = nullptr);

BlockVec ipalm_step(const FiniteSumProblem& problem, const BlockVec& x,
                    const BlockVec& x_prev, double alpha, double beta,
                    const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                    std::vector<double>* tau_out = nullptr);

BlockVec spring_step(const FiniteSumProblem& problem, const BlockVec& x,
                     StochasticState& state, bool force_full,
                     const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                     std::vector<double>* tau_out = nullptr);

BlockVec ispalm_step(const FiniteSumProblem& problem, const BlockVec& x,
                     const BlockVec& x_prev, double alpha, double beta,
                     StochasticState& state, bool force_full,
                     const std::vector<ProxOp>& prox, const SolverConfig& cfg,
                     std::vector<double>* tau_out = nullptr);

struct TraceRow {
  int epoch = 0;
  double objective = 0.0;
  double grad_sq_norm = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string status = "ok";
};

struct RunResult {
  std::vector<TraceRow> rows;
  BlockVec final_point;
  bool aborted = false;
  std::string message;
};

// Runs epochs * steps_per_epoch block passes from `init`.  Stochastic
// algorithms force an estimator refresh on the first step of every epoch.
// One row is recorded at epoch 0 and after each epoch, always with the full
// objective (H plus the f_j) and the full (generalized) squared gradient
// norm.  A non-finite objective aborts the run: the trace is truncated and
// its last row is flagged status=numerical_error (carrying the last finite
// objective).
RunResult run(const FiniteSumProblem& problem, const BlockVec& init,
              const std::vector<ProxOp>& prox, const SolverConfig& cfg);

}  // namespace palmkit
