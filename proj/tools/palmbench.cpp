// palmbench: seeded block-coordinate optimization benchmarks.
//
//   palmbench gen-data   --config exp.json [--out DIR]
//   palmbench run        --config exp.json [--out DIR] [--seeds 1,2,3] [--epochs N]
//   palmbench grad-check --config exp.json [--corrupt-block J]
//   palmbench compare    a_aggregate.csv b_aggregate.csv [...]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 malformed input file.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "palmkit/errors.hpp"
#include "palmkit/harness/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_override;
  std::vector<std::uint64_t> seeds_override;
  int epochs_override = 0;
};

void add_config_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--config", flags->config_path, "experiment JSON file")
      ->required();
  cmd->add_option("--out", flags->out_override,
                  "override the configured output directory");
}

palmkit::ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  palmkit::ExperimentConfig cfg = palmkit::load_config(flags.config_path);
  if (!flags.out_override.empty()) cfg.output_dir = flags.out_override;
  if (!flags.seeds_override.empty()) cfg.seeds = flags.seeds_override;
  if (flags.epochs_override > 0)
    for (palmkit::AlgorithmEntry& entry : cfg.algorithms)
      entry.solver.epochs = flags.epochs_override;
  palmkit::validate_config(cfg);
  return cfg;
}

int dispatch(const CLI::App& app, const CommonFlags& flags,
             std::size_t corrupt_block,
             const std::vector<std::string>& compare_paths) {
  if (app.got_subcommand("gen-data")) {
    const auto files = palmkit::cmd_gen_data(load_with_overrides(flags));
    for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
    return 0;
  }

  if (app.got_subcommand("run")) {
    const palmkit::ExperimentConfig cfg = load_with_overrides(flags);
    const palmkit::RunOutput out = palmkit::cmd_run(cfg);
    std::printf("config: %s\n", out.config_file.c_str());
    for (const palmkit::AlgorithmSummary& a : out.algorithms) {
      std::printf("%-24s final mean objective %.10g  (%zu seeds)\n",
                  a.label.c_str(), a.final_mean_obj, a.raw_files.size());
      if (!a.final_test_accuracy.empty()) {
        double acc = 0.0;
        for (const double v : a.final_test_accuracy) acc += v;
        acc /= static_cast<double>(a.final_test_accuracy.size());
        std::printf("%-24s mean test accuracy   %.4f\n", "", acc);
      }
      std::printf("%-24s aggregate %s\n", "", a.aggregate_file.c_str());
    }
    return 0;
  }

  if (app.got_subcommand("grad-check")) {
    const palmkit::ExperimentConfig cfg = load_with_overrides(flags);
    const palmkit::GradCheckReport report =
        palmkit::cmd_grad_check(cfg, corrupt_block);
    for (const auto& [name, err] : report.blocks)
      std::printf("%-12s max rel err %.3e  %s\n", name.c_str(), err,
                  err <= report.threshold ? "ok" : "FAIL");
    std::printf("gradient check: %s (threshold %.1e)\n",
                report.ok ? "PASS" : "FAIL", report.threshold);
    return report.ok ? 0 : 3;
  }

  if (app.got_subcommand("compare")) {
    const palmkit::CompareReport report = palmkit::cmd_compare(compare_paths);
    std::fputs(report.table.c_str(), stdout);
    return 0;
  }

  std::fputs("palmbench: no subcommand given (try --help)\n", stderr);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seeded benchmarks for block-coordinate PALM-family solvers"};
  app.require_subcommand(0, 1);

  CommonFlags flags;
  std::size_t corrupt_block = SIZE_MAX;
  std::vector<std::string> compare_paths;

  CLI::App* gen = app.add_subcommand(
      "gen-data", "write the shared dataset and initialization");
  add_config_flags(gen, &flags);

  CLI::App* run = app.add_subcommand(
      "run", "run every (algorithm, seed) pair and write trace CSVs");
  add_config_flags(run, &flags);
  run->add_option("--seeds", flags.seeds_override,
                  "override the configured seed list")
      ->delimiter(',');
  run->add_option("--epochs", flags.epochs_override,
                  "override epochs for every algorithm")
      ->check(CLI::PositiveNumber);

  CLI::App* gc = app.add_subcommand(
      "grad-check", "finite-difference validation of the analytic gradients");
  add_config_flags(gc, &flags);
  gc->add_option("--corrupt-block", corrupt_block,
                 "scale this block's analytic gradient by 1.01 (negative "
                 "control; the check must then fail)");

  CLI::App* cmp = app.add_subcommand(
      "compare", "rank aggregate CSVs by final mean objective");
  cmp->add_option("files", compare_paths, "aggregate CSV paths")
      ->required()
      ->expected(-1);

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app, flags, corrupt_block, compare_paths);
  } catch (const palmkit::FormatError& e) {
    std::fprintf(stderr, "palmbench: %s\n", e.what());
    return 4;
  } catch (const palmkit::NumericalError& e) {
    std::fprintf(stderr, "palmbench: %s\n", e.what());
    return 3;
  } catch (const palmkit::ConfigError& e) {
    std::fprintf(stderr, "palmbench: %s\n", e.what());
    return 2;
  } catch (const palmkit::ShapeError& e) {
    std::fprintf(stderr, "palmbench: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "palmbench: %s\n", e.what());
    return 2;
  }
}
