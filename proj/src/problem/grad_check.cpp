#include "palmkit/problem/grad_check.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "palmkit/errors.hpp"
#include "palmkit/rng/philox.hpp"

namespace palmkit {

namespace {

// trailing d x d slices of a symmetric block
struct SymLayout {
  std::int64_t slices = 1;
  std::int64_t d = 0;
};

SymLayout sym_layout(const BlockSpec& spec) {
  const auto& sh = spec.shape;
  if (sh.size() < 2)
    throw ShapeError("symmetric block needs at least two dimensions");
  SymLayout out;
  out.d = sh.back();
  if (sh[sh.size() - 2] != out.d)
    throw ShapeError("symmetric block must end in square dimensions");
  for (std::size_t i = 0; i + 2 < sh.size(); ++i) out.slices *= sh[i];
  return out;
}

void symmetrize_slices(Tensor& v, const SymLayout& lay) {
  for (std::int64_t s = 0; s < lay.slices; ++s) {
    double* m = v.data() + s * lay.d * lay.d;
    for (std::int64_t r = 0; r < lay.d; ++r)
      for (std::int64_t c = r + 1; c < lay.d; ++c) {
        const double avg = 0.5 * (m[r * lay.d + c] + m[c * lay.d + r]);
        m[r * lay.d + c] = avg;
        m[c * lay.d + r] = avg;
      }
  }
}

double directional_check(const FiniteSumProblem& problem, const BlockVec& x,
                         std::span<const std::int64_t> batch, std::size_t j,
                         const Tensor& analytic, const Tensor& v, double h) {
  double a = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) a += analytic[i] * v[i];

  BlockVec probe = x;
  Tensor xb = x.value(j);
  axpy_inplace(xb, h, v);
  probe.value(j) = xb;
  const double fp = problem.eval_batch(probe, batch);
  xb = x.value(j);
  axpy_inplace(xb, -h, v);
  probe.value(j) = xb;
  const double fm = problem.eval_batch(probe, batch);
  const double fd = (fp - fm) / (2.0 * h);
  return std::abs(a - fd) / std::max(1.0, std::abs(fd));
}

}  // namespace

GradCheckResult check_gradients(const FiniteSumProblem& problem,
                                const BlockVec& x,
                                std::span<const std::int64_t> batch,
                                std::uint64_t seed, int directions_per_block,
                                double h_scale, double corrupt_factor,
                                std::size_t corrupt_block) {
  const auto& specs = problem.block_specs();
  GradCheckResult result;
  result.block_rel_err.assign(specs.size(), 0.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  for (std::size_t j = 0; j < specs.size(); ++j) {
    Tensor analytic = problem.grad_block_batch(x, j, batch);
    if (j == corrupt_block)
      for (std::int64_t i = 0; i < analytic.size(); ++i)
        analytic[i] *= corrupt_factor;

    const double h =
        h_scale * (1.0 + std::sqrt(squared_norm(x.value(j))));
    const auto note = [&](double err) {
      result.block_rel_err[j] = std::max(result.block_rel_err[j], err);
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst_block = j;
      }
    };

    if (directions_per_block > 0) {
      Rng dir(seed, "gradcheck/" + specs[j].name);
      for (int t = 0; t < directions_per_block; ++t) {
        Tensor v(specs[j].shape);
        for (std::int64_t i = 0; i < v.size(); ++i) v[i] = dir.normal();
        if (specs[j].symmetric) symmetrize_slices(v, sym_layout(specs[j]));
        const double norm = std::sqrt(squared_norm(v));
        if (norm < 1e-12) continue;
        v = scale(v, 1.0 / norm);
        note(directional_check(problem, x, batch, j, analytic, v, h));
      }
    } else if (!specs[j].symmetric) {
      for (std::int64_t i = 0; i < analytic.size(); ++i) {
        Tensor v(specs[j].shape);
        v[i] = 1.0;
        note(directional_check(problem, x, batch, j, analytic, v, h));
      }
    } else {
      const SymLayout lay = sym_layout(specs[j]);
      for (std::int64_t s = 0; s < lay.slices; ++s) {
        for (std::int64_t r = 0; r < lay.d; ++r)
          for (std::int64_t c = r; c < lay.d; ++c) {
            Tensor v(specs[j].shape);
            double* m = v.data() + s * lay.d * lay.d;
            if (r == c) {
              m[r * lay.d + c] = 1.0;
            } else {
              m[r * lay.d + c] = inv_sqrt2;
              m[c * lay.d + r] = inv_sqrt2;
            }
            note(directional_check(problem, x, batch, j, analytic, v, h));
          }
      }
    }
  }
  return result;
}

}  // namespace palmkit
