#include "palmkit/harness/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "palmkit/errors.hpp"
#include "palmkit/pnn/data.hpp"
#include "palmkit/pnn/io.hpp"
#include "palmkit/pnn/pnn.hpp"
#include "palmkit/problem/grad_check.hpp"
#include "palmkit/problem/quadratic.hpp"
#include "palmkit/studentt/io.hpp"
#include "palmkit/studentt/sample.hpp"
#include "palmkit/studentt/tmm.hpp"

namespace palmkit {

namespace {

namespace fs = std::filesystem;

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

// Everything cmd_run needs about the configured problem.
struct ProblemBundle {
  std::unique_ptr<FiniteSumProblem> problem;
  BlockVec init;
  std::vector<ProxOp> prox;
  // pnn only: held-out split for accuracy reporting
  bool has_test = false;
  LabeledBatch test;
};

Tensor one_hot_targets(const Tensor& labels) {
  Tensor targets = Tensor::matrix(labels.size(), kPnnClasses);
  for (std::int64_t i = 0; i < labels.size(); ++i) {
    const double v = labels[i];
    if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(kPnnClasses))
      throw FormatError("label value outside [0, 10) in idx file", 0);
    targets(i, static_cast<std::int64_t>(v)) = 1.0;
  }
  return targets;
}

Tensor flatten_images(const Tensor& images) {
  if (images.rank() != 3)
    throw FormatError("expected a rank-3 idx image tensor", 0);
  Tensor flat = Tensor::matrix(images.shape()[0],
                               images.shape()[1] * images.shape()[2]);
  std::copy(images.data(), images.data() + images.size(), flat.data());
  return flat;
}

LabeledBatch load_idx_batch(const std::string& dir, const std::string& split) {
  LabeledBatch out;
  out.inputs = flatten_images(load_idx(join(dir, split + "_images.idx")));
  out.targets = one_hot_targets(load_idx(join(dir, split + "_labels.idx")));
  if (out.inputs.rows() != out.targets.rows())
    throw FormatError("idx image and label counts disagree for " + split, 0);
  return out;
}

Tensor labels_from_targets(const Tensor& targets) {
  Tensor labels = Tensor::vector(targets.rows());
  for (std::int64_t i = 0; i < targets.rows(); ++i) {
    std::int64_t best = 0;
    for (std::int64_t c = 1; c < targets.cols(); ++c)
      if (targets(i, c) > targets(i, best)) best = c;
    labels[i] = static_cast<double>(best);
  }
  return labels;
}

void reshape_to_grid(const Tensor& flat, Tensor& out) {
  // 8 x 8 synthetic layout (d = 64)
  out = Tensor({flat.rows(), 8, 8});
  std::copy(flat.data(), flat.data() + flat.size(), out.data());
}

ProblemBundle build_tmm(const ExperimentConfig& cfg) {
  ProblemBundle out;
  Dataset data;
  TmmParams init;
  if (cfg.data == "generate") {
    const ConstrainedParams truth =
        generate_ground_truth(Rng(cfg.tmm.data_seed), cfg.tmm.K, cfg.tmm.d);
    data = sample_mm(Rng(cfg.tmm.data_seed), truth, cfg.tmm.n);
    init = init_params(data, cfg.tmm.K, Rng(cfg.tmm.init_seed), cfg.tmm.eps);
  } else {
    data = load_dataset(join(cfg.data, "dataset.tmmd"));
    init = load_params(join(cfg.data, "init.json"));
  }
  out.init = tmm_to_blockvec(init);
  out.problem = std::make_unique<TmmProblem>(std::move(data), init.K, init.eps);
  out.prox.assign(out.problem->block_specs().size(), identity_prox());
  return out;
}

ProblemBundle build_pnn(const ExperimentConfig& cfg) {
  ProblemBundle out;
  LabeledBatch train;
  PnnWeights init;
  if (cfg.data == "generate") {
    const PnnDataset ds = synthetic_digits(Rng(cfg.pnn.data_seed),
                                           cfg.pnn.n_train, cfg.pnn.n_test,
                                           cfg.pnn.noise_sigma);
    train = ds.train;
    out.test = ds.test;
    init = init_weights(Rng(cfg.pnn.init_seed), 64, cfg.pnn.widths);
  } else {
    train = load_idx_batch(cfg.data, "train");
    out.test = load_idx_batch(cfg.data, "test");
    init = load_weights(join(cfg.data, "init_weights.json"));
    if (init.d != train.inputs.cols())
      throw ConfigError("pnn: stored weights do not match the image size");
  }
  out.has_test = true;
  out.init = pnn_to_blockvec(init);
  out.problem =
      std::make_unique<PnnProblem>(std::move(train), init.d, init.widths);
  out.prox = pnn_prox_ops();
  return out;
}

ProblemBundle build_quadratic(const ExperimentConfig& cfg) {
  if (cfg.data != "generate")
    throw ConfigError("quadratic problems are always generated in memory");
  ProblemBundle out;
  out.problem = std::make_unique<QuadraticFiniteSum>(
      cfg.quadratic.n, cfg.quadratic.sizes, cfg.quadratic.data_seed,
      cfg.quadratic.spread);
  out.init = out.problem->make_point();
  Rng r(cfg.quadratic.init_seed, "init");
  for (std::size_t j = 0; j < out.init.block_count(); ++j) {
    Tensor& t = out.init.value(j);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = r.normal();
  }
  out.prox.assign(out.problem->block_specs().size(), identity_prox());
  return out;
}

ProblemBundle build_problem(const ExperimentConfig& cfg) {
  if (cfg.problem == "tmm") return build_tmm(cfg);
  if (cfg.problem == "pnn") return build_pnn(cfg);
  return build_quadratic(cfg);
}

}  // namespace

std::vector<std::string> cmd_gen_data(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ensure_dir(cfg.output_dir);
  std::vector<std::string> files;

  if (cfg.problem == "tmm") {
    const ConstrainedParams truth =
        generate_ground_truth(Rng(cfg.tmm.data_seed), cfg.tmm.K, cfg.tmm.d);
    const Dataset data = sample_mm(Rng(cfg.tmm.data_seed), truth, cfg.tmm.n);
    const TmmParams init =
        init_params(data, cfg.tmm.K, Rng(cfg.tmm.init_seed), cfg.tmm.eps);

    const std::string data_path = join(cfg.output_dir, "dataset.tmmd");
    save_dataset(data_path, data);
    files.push_back(data_path);

    nlohmann::json truth_json;
    truth_json["K"] = truth.K;
    truth_json["d"] = truth.d;
    truth_json["alpha"] = std::vector<double>(
        truth.alpha.data(), truth.alpha.data() + truth.alpha.size());
    truth_json["nu"] = std::vector<double>(truth.nu.data(),
                                           truth.nu.data() + truth.nu.size());
    std::vector<double> mu_cm;
    for (std::int64_t k = 0; k < truth.K; ++k)
      for (std::int64_t r = 0; r < truth.d; ++r) mu_cm.push_back(truth.mu(r, k));
    truth_json["mu"] = mu_cm;
    std::vector<std::vector<double>> sig;
    for (const Tensor& s : truth.sigma)
      sig.emplace_back(s.data(), s.data() + s.size());
    truth_json["sigma"] = sig;
    const std::string truth_path = join(cfg.output_dir, "ground_truth.json");
    {
      std::ofstream f(truth_path);
      if (!f) throw Error("cannot open '" + truth_path + "'");
      f << truth_json.dump(2) << "\n";
    }
    files.push_back(truth_path);

    const std::string init_path = join(cfg.output_dir, "init.json");
    save_params(init_path, init);
    files.push_back(init_path);
  } else if (cfg.problem == "pnn") {
    const PnnDataset ds =
        synthetic_digits(Rng(cfg.pnn.data_seed), cfg.pnn.n_train,
                         cfg.pnn.n_test, cfg.pnn.noise_sigma);
    Tensor grid;
    const auto dump_split = [&](const std::string& split,
                                const LabeledBatch& batch) {
      reshape_to_grid(batch.inputs, grid);
      const std::string img = join(cfg.output_dir, split + "_images.idx");
      save_idx_images(img, grid);
      files.push_back(img);
      const std::string lab = join(cfg.output_dir, split + "_labels.idx");
      save_idx_labels(lab, labels_from_targets(batch.targets));
      files.push_back(lab);
    };
    dump_split("train", ds.train);
    dump_split("test", ds.test);

    const PnnWeights init =
        init_weights(Rng(cfg.pnn.init_seed), 64, cfg.pnn.widths);
    const std::string w_path = join(cfg.output_dir, "init_weights.json");
    save_weights(w_path, init);
    files.push_back(w_path);
  } else {
    throw ConfigError(
        "gen-data supports tmm and pnn; quadratic problems are generated in "
        "memory");
  }

  const std::string cfg_path = join(cfg.output_dir, "config_resolved.json");
  save_config(cfg_path, cfg);
  files.push_back(cfg_path);
  return files;
}

RunOutput cmd_run(const ExperimentConfig& cfg) {
  validate_config(cfg);
  ProblemBundle bundle = build_problem(cfg);
  ensure_dir(cfg.output_dir);

  RunOutput out;
  out.config_file = join(cfg.output_dir, "config_resolved.json");
  save_config(out.config_file, cfg);

  for (const AlgorithmEntry& entry : cfg.algorithms) {
    AlgorithmSummary summary;
    summary.label = entry.label;
    std::vector<std::vector<TraceRow>> traces;

    for (const std::uint64_t seed : cfg.seeds) {
      SolverConfig sc = entry.solver;
      sc.seed = seed;
      validate(sc, *bundle.problem);
      const RunResult res = run(*bundle.problem, bundle.init, bundle.prox, sc);

      const std::string raw_path =
          join(cfg.output_dir,
               entry.label + "_seed" + std::to_string(seed) + ".csv");
      write_raw_csv(raw_path, res.rows);
      summary.raw_files.push_back(raw_path);
      summary.final_objectives.push_back(res.rows.back().objective);
      if (bundle.has_test) {
        const PnnWeights w = pnn_from_blockvec(res.final_point);
        summary.final_test_accuracy.push_back(pnn_accuracy(w, bundle.test));
      }
      traces.push_back(res.rows);
    }

    const std::vector<AggregateRow> agg = aggregate_traces(traces);
    summary.aggregate_file =
        join(cfg.output_dir, entry.label + "_aggregate.csv");
    write_aggregate_csv(summary.aggregate_file, agg);
    summary.final_mean_obj = agg.back().mean_obj;
    out.algorithms.push_back(std::move(summary));
  }
  return out;
}

GradCheckReport cmd_grad_check(const ExperimentConfig& cfg,
                               std::size_t corrupt_block) {
  validate_config(cfg);
  GradCheckReport report;

  std::unique_ptr<FiniteSumProblem> problem;
  BlockVec point;
  if (cfg.problem == "tmm") {
    // small instance: the finite-difference suite is a correctness probe,
    // not a performance run
    const std::int64_t n = 12, d = 3, K = 2;
    const ConstrainedParams truth =
        generate_ground_truth(Rng(cfg.tmm.data_seed), K, d);
    Dataset data = sample_mm(Rng(cfg.tmm.data_seed), truth, n);
    const TmmParams params =
        init_params(data, K, Rng(cfg.tmm.init_seed), cfg.tmm.eps);
    point = tmm_to_blockvec(params);
    problem = std::make_unique<TmmProblem>(std::move(data), K, cfg.tmm.eps);
  } else if (cfg.problem == "pnn") {
    const std::int64_t m = 8, d = 6;
    const std::vector<std::int64_t> widths = {5, 4, 3};
    Rng r(cfg.pnn.data_seed, "gradcheck");
    LabeledBatch data;
    data.inputs = Tensor::matrix(m, d);
    data.targets = Tensor::matrix(m, kPnnClasses);
    for (std::int64_t i = 0; i < data.inputs.size(); ++i)
      data.inputs[i] = r.normal();
    for (std::int64_t i = 0; i < m; ++i)
      data.targets(i, r.uniform_int(kPnnClasses)) = 1.0;
    PnnWeights w = init_weights(Rng(cfg.pnn.init_seed), d, widths);
    for (Tensor& b : w.b)
      for (std::int64_t i = 0; i < b.size(); ++i) b[i] = 0.1 * r.normal();
    point = pnn_to_blockvec(w);
    problem = std::make_unique<PnnProblem>(std::move(data), d, widths);
  } else {
    problem = std::make_unique<QuadraticFiniteSum>(
        10, std::vector<std::int64_t>{3, 2}, cfg.quadratic.data_seed);
    point = problem->make_point();
    Rng r(cfg.quadratic.init_seed, "init");
    for (std::size_t j = 0; j < point.block_count(); ++j)
      for (std::int64_t i = 0; i < point.value(j).size(); ++i)
        point.value(j)[i] = r.normal();
  }

  const std::vector<std::int64_t> idx = all_indices(problem->sample_count());
  const GradCheckResult res =
      check_gradients(*problem, point, idx, 0, 0, 1e-5, 1.01, corrupt_block);
  const auto& specs = problem->block_specs();
  for (std::size_t j = 0; j < specs.size(); ++j) {
    report.blocks.emplace_back(specs[j].name, res.block_rel_err[j]);
    if (res.block_rel_err[j] > report.threshold) report.ok = false;
  }
  return report;
}

CompareReport cmd_compare(const std::vector<std::string>& aggregate_paths) {
  if (aggregate_paths.size() < 2)
    throw ConfigError("compare: need at least two aggregate CSVs");

  CompareReport report;
  std::vector<std::vector<AggregateRow>> tables;
  for (const std::string& path : aggregate_paths) {
    tables.push_back(read_aggregate_csv(path));
    CompareEntry entry;
    std::string name = fs::path(path).stem().string();
    const std::string suffix = "_aggregate";
    if (name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      name.resize(name.size() - suffix.size());
    entry.name = name;
    entry.final_mean_obj = tables.back().back().mean_obj;
    report.entries.push_back(std::move(entry));
  }

  double best = report.entries[0].final_mean_obj;
  for (const CompareEntry& e : report.entries)
    best = std::min(best, e.final_mean_obj);
  const double threshold = best + 0.01 * std::abs(best);

  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    CompareEntry& e = report.entries[i];
    e.rank = 1;
    for (const CompareEntry& other : report.entries)
      if (other.final_mean_obj < e.final_mean_obj) ++e.rank;
    e.reach_epoch = tables[i].back().epoch;
    for (const AggregateRow& row : tables[i])
      if (row.mean_obj <= threshold) {
        e.reach_epoch = row.epoch;
        break;
      }
  }

  std::vector<std::size_t> order(report.entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (report.entries[a].rank != report.entries[b].rank)
      return report.entries[a].rank < report.entries[b].rank;
    return report.entries[a].name < report.entries[b].name;
  });

  char buf[160];
  std::string table =
      "rank  algorithm                final_mean_obj          reach_epoch\n";
  for (const std::size_t i : order) {
    const CompareEntry& e = report.entries[i];
    std::snprintf(buf, sizeof buf, "%-5d %-24s %-23.17g %d\n", e.rank,
                  e.name.c_str(), e.final_mean_obj, e.reach_epoch);
    table += buf;
  }
  report.table = std::move(table);
  return report;
}

}  // namespace palmkit
