#pragma once

#include <functional>

#include "palmkit/linalg/tensor.hpp"

namespace palmkit {

// Proximal operator of a block function f with step weight tau:
//   apply(v, tau) = argmin_x { f(x) + tau/2 |x - v|^2 }
// `value` evaluates f itself (0 for indicators at feasible points, which is
// where solvers evaluate it).  Identity proxes (f = 0) are flagged so the
// trace can fall back to the plain gradient norm.
struct ProxOp {
  std::function<Tensor(const Tensor&, double)> apply;
  std::function<double(const Tensor&)> value;
  bool is_identity = true;
};

// f = 0
ProxOp identity_prox();
// f = weight * |x|_1  (elementwise soft threshold at weight / tau)
ProxOp l1_prox(double weight);
// f = indicator of the box [lo, hi]^m (clip)
ProxOp box_prox(double lo, double hi);

}  // namespace palmkit
