#pragma once

#include <cstdint>

#include "palmkit/pnn/pnn.hpp"
#include "palmkit/rng/philox.hpp"

namespace palmkit {

// Random feasible starting point: T_1..T_3 are projected Gaussian matrices
// (orthonormal columns), T_4 is 0.1 * Gaussian clipped to the box, biases
// are zero.
PnnWeights init_weights(const Rng& rng, std::int64_t d,
                        std::vector<std::int64_t> widths);

// Ten-class synthetic image set on an 8 x 8 grid (d = 64): one random
// prototype per class with i.i.d. uniform [0, 1] pixels, samples drawn as
// prototype + noise_sigma * Gaussian clipped back to [0, 1], labels one-hot.
// Train and test splits use disjoint substreams of `rng`.
struct PnnDataset {
  LabeledBatch train;
  LabeledBatch test;
};
PnnDataset synthetic_digits(const Rng& rng, std::int64_t n_train,
                            std::int64_t n_test, double noise_sigma = 0.1);

}  // namespace palmkit
