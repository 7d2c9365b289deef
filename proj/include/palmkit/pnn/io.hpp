#pragma once

#include <string>

#include "palmkit/pnn/pnn.hpp"

namespace palmkit {

// IDX reader (big-endian).  Magic 0x00000803 (u8, rank 3) yields an
// [n, rows, cols] tensor with pixels rescaled to [0, 1]; magic 0x00000801
// (u8, rank 1) yields an [n] tensor of label values.  Anything else, or a
// truncated payload, raises FormatError with the offending byte offset.
Tensor load_idx(const std::string& path);

// IDX writers for the same two layouts.  Images must be an [n, rows, cols]
// tensor with values in [0, 1]; they are quantized to u8 by rounding (so a
// write-read round trip reproduces values at 1/255 resolution exactly).
// Labels must be an [n] tensor of integers in [0, 255].
void save_idx_images(const std::string& path, const Tensor& images);
void save_idx_labels(const std::string& path, const Tensor& labels);

// Weights as JSON: dimensions plus row-major float64 arrays per tensor.
// Round-trips bitwise.
void save_weights(const std::string& path, const PnnWeights& u);
PnnWeights load_weights(const std::string& path);

}  // namespace palmkit
