#pragma once

#include <string>

#include "palmkit/studentt/tmm.hpp"

namespace palmkit {

// Binary dataset format: magic "TMMD", u32 n, u32 d (little-endian), then
// n*d float64 row-major.  Malformed input raises FormatError with the byte
// offset of the first bad field.
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

// Headerless CSV with d comma-separated columns per row.
Dataset load_dataset_csv(const std::string& path);

// Raw parameters as JSON: K, d, eps, alpha_raw, nu_raw, mu (column-major,
// component by component), sigma_raw (per component, row-major).
void save_params(const std::string& path, const TmmParams& params);
TmmParams load_params(const std::string& path);

}  // namespace palmkit
