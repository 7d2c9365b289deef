#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "palmkit/problem/finite_sum.hpp"

namespace palmkit {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t worst_block = 0;
  std::vector<double> block_rel_err;  // worst error per block
};

// Compares analytic block gradients against central finite differences of
// eval_batch along directions V: analytic <g_j, V> versus
// (H(x + hV) - H(x - hV)) / (2h) with h = h_scale * (1 + |x_j|) and unit V.
// Relative error per direction: |a - f| / max(1, |f|).
//
// directions_per_block == 0 probes the full coordinate basis (the symmetric
// basis E_rr and (E_rc + E_cr)/sqrt(2) for blocks marked symmetric);
// otherwise that many seeded random unit directions are used (symmetrized
// for symmetric blocks).
//
// corrupt_block/corrupt_factor scale one analytic block before comparing,
// exercising the checker's ability to flag a wrong gradient.
GradCheckResult check_gradients(const FiniteSumProblem& problem,
                                const BlockVec& x,
                                std::span<const std::int64_t> batch,
                                std::uint64_t seed = 0,
                                int directions_per_block = 0,
                                double h_scale = 1e-6,
                                double corrupt_factor = 1.0,
                                std::size_t corrupt_block = SIZE_MAX);

}  // namespace palmkit
