#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "palmkit/harness/config.hpp"
#include "palmkit/harness/csv.hpp"

namespace palmkit {

// Experiment commands behind the CLI.  Each returns structured results (the
// CLI formats them) and writes its files atomically under
// cfg.output_dir, including a fully resolved copy of the config so runs are
// self-describing.

// Writes the shared dataset, ground truth, and initialization for the
// configured problem (tmm or pnn; the quadratic problem is always generated
// in memory).  Returns the paths written.
std::vector<std::string> cmd_gen_data(const ExperimentConfig& cfg);

struct AlgorithmSummary {
  std::string label;
  std::vector<std::string> raw_files;  // one per seed, seed order
  std::string aggregate_file;
  std::vector<double> final_objectives;  // per seed, seed order
  double final_mean_obj = 0.0;
  // pnn only: test accuracy of the final iterate, per seed
  std::vector<double> final_test_accuracy;
};

struct RunOutput {
  std::string config_file;
  std::vector<AlgorithmSummary> algorithms;
};

// Runs every (algorithm, seed) pair from a shared dataset and a shared
// initialization; writes one raw trace CSV per pair and one aggregate CSV
// per algorithm.
RunOutput cmd_run(const ExperimentConfig& cfg);

struct GradCheckReport {
  std::vector<std::pair<std::string, double>> blocks;  // name, max rel err
  double threshold = 1e-4;
  bool ok = true;
};

// Finite-difference validation of the analytic gradients on a small seeded
// instance of the configured problem.  `corrupt_block` (when set) scales
// that analytic block by 1.01 -- the negative control proving the check can
// fail.
GradCheckReport cmd_grad_check(const ExperimentConfig& cfg,
                               std::size_t corrupt_block = SIZE_MAX);

struct CompareEntry {
  std::string name;
  double final_mean_obj = 0.0;
  int rank = 0;         // 1 + number of strictly better entries
  int reach_epoch = 0;  // first epoch within 1% of the best final value
};

struct CompareReport {
  std::vector<CompareEntry> entries;  // input order
  std::string table;                  // printable summary
};

// Ranks >= 2 aggregate CSVs by final mean objective.
CompareReport cmd_compare(const std::vector<std::string>& aggregate_paths);

}  // namespace palmkit
