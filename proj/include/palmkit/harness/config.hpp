#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palmkit/optim/solver.hpp"

namespace palmkit {

// Experiment description loaded from a single JSON file.  Unknown keys are
// rejected everywhere (typo protection); absent keys fall back to the
// defaults below, and the fully resolved config is re-emitted into the
// output directory so every run is self-describing.

struct TmmExperiment {
  std::int64_t n = 2000;
  std::int64_t d = 3;
  std::int64_t K = 5;
  double eps = 1e-3;
  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
};

struct PnnExperiment {
  std::int64_t n_train = 6000;
  std::int64_t n_test = 1000;
  std::vector<std::int64_t> widths = {32, 16, 16};
  double noise_sigma = 0.1;
  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
};

struct QuadraticExperiment {
  std::int64_t n = 200;
  std::vector<std::int64_t> sizes = {4, 3};
  double spread = 1.0;
  std::uint64_t data_seed = 1;
  std::uint64_t init_seed = 2;
};

// One solver entry: a SolverConfig plus the label used in output filenames.
struct AlgorithmEntry {
  std::string label;
  SolverConfig solver;
};

struct ExperimentConfig {
  std::string problem = "tmm";  // tmm | pnn | quadratic
  std::string output_dir = "out";
  std::string data = "generate";  // "generate" or a directory written by gen-data
  std::vector<std::uint64_t> seeds = {1};
  std::vector<AlgorithmEntry> algorithms;
  TmmExperiment tmm;
  PnnExperiment pnn;
  QuadraticExperiment quadratic;
};

// Parse and validate; throws FormatError on malformed JSON or unknown keys
// and ConfigError on invalid values (duplicate seeds or labels, bad problem
// name, empty algorithm list, ...).
ExperimentConfig load_config(const std::string& path);

// Fully resolved JSON (all defaults materialized); deterministic bytes.
std::string config_to_json(const ExperimentConfig& cfg);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Post-parse validation used by load_config and by tests building configs
// in code.
void validate_config(const ExperimentConfig& cfg);

}  // namespace palmkit
