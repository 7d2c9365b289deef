#pragma once

#include "palmkit/rng/philox.hpp"
#include "palmkit/studentt/tmm.hpp"

namespace palmkit {

// Draws n mixture samples: component k ~ Categorical(alpha), then
// x = mu_k + sqrt(nu_k / w) * (L_k z) with z standard normal and
// w ~ chi-square(nu_k).  Substreams: component / normal / chisq.
Dataset sample_mm(const Rng& rng, const ConstrainedParams& truth,
                  std::int64_t n);

// Random ground-truth parameters:
//   weights (a^2 + 1) / |a^2 + 1|_1 with a standard normal,
//   nu = min(b^2 + 1, 100) with b ~ N(0, 10^2),
//   mu entries ~ N(0, 2^2),
//   scatter = B^T B + I with B standard normal.
// Substreams: alpha / nu / mu / sigma.
ConstrainedParams generate_ground_truth(const Rng& rng, std::int64_t K,
                                        std::int64_t d);

// Random class assignment; per class: mean, biased sample covariance + eps I,
// nu = 3, weight = class frequency.  Empty classes steal one random sample
// from the largest class (ties broken toward the lowest class index).  Raw
// parameters recover the intended constrained values through log, sqrt, and
// the symmetric PSD square root.  Requires n >= K (d + 1).
TmmParams init_params(const Dataset& data, std::int64_t K, const Rng& rng,
                      double eps = 1e-3);

}  // namespace palmkit
