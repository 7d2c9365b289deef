#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "palmkit/errors.hpp"
#include "palmkit/harness/harness.hpp"
#include "palmkit/pnn/io.hpp"
#include "palmkit/rng/philox.hpp"
#include "palmkit/studentt/io.hpp"

using namespace palmkit;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  REQUIRE(bool(f));
  f << content;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

// file content with one CSV column blanked out (timing columns vary from
// run to run; everything else must reproduce exactly)
std::string drop_column(const std::string& content, std::size_t col) {
  std::string out;
  for (std::string& line : split(content, '\n')) {
    std::vector<std::string> fields = split(line, ',');
    if (col < fields.size()) fields[col].clear();
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  }
  return out;
}

struct TempDir {
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (fs::path(path) / name).string();
  }
  fs::path path;
};

AlgorithmEntry make_entry(const std::string& label, Algorithm alg, double s1,
                          std::int64_t batch, int epochs, int steps) {
  AlgorithmEntry e;
  e.label = label;
  e.solver.algorithm = alg;
  e.solver.s1 = s1;
  e.solver.batch_size = batch;
  e.solver.epochs = epochs;
  e.solver.steps_per_epoch = steps;
  return e;
}

ExperimentConfig quadratic_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.problem = "quadratic";
  cfg.output_dir = out_dir;
  cfg.seeds = {1, 2, 3};
  cfg.quadratic.n = 64;
  cfg.quadratic.sizes = {4, 3};
  cfg.algorithms = {
      make_entry("palm", Algorithm::palm, 3.0, 0, 5, 2),
      make_entry("spring", Algorithm::spring, 3.0, 16, 5, 2),
  };
  return cfg;
}

bool no_leftover_temp_files(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".tmp") return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration files
// ---------------------------------------------------------------------------

TEST_CASE("config: full file round trip with explicit values") {
  TempDir dir("tmp_harness_cfg");
  const std::string path = dir.file("exp.json");
  write_file(path, R"({
    "problem": "pnn",
    "output_dir": "results",
    "data": "some/dir",
    "seeds": [3, 1, 4],
    "pnn": {"n_train": 123, "n_test": 45, "widths": [8, 7, 6],
            "noise_sigma": 0.25, "data_seed": 9, "init_seed": 10},
    "algorithms": [
      {"label": "fast", "algorithm": "ispalm", "s1": 2.5, "s2": 0.4,
       "batch_size": 12, "sarah_p": 8.0, "epochs": 4, "steps_per_epoch": 3,
       "lipschitz_floor": 1e-5, "fd_step_scale": 1e-3}
    ]
  })");
  const ExperimentConfig cfg = load_config(path);
  CHECK(cfg.problem == "pnn");
  CHECK(cfg.output_dir == "results");
  CHECK(cfg.data == "some/dir");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 1, 4});
  CHECK(cfg.pnn.n_train == 123);
  CHECK(cfg.pnn.n_test == 45);
  CHECK(cfg.pnn.widths == std::vector<std::int64_t>{8, 7, 6});
  CHECK(cfg.pnn.noise_sigma == 0.25);
  CHECK(cfg.pnn.data_seed == 9);
  CHECK(cfg.pnn.init_seed == 10);
  REQUIRE(cfg.algorithms.size() == 1);
  const AlgorithmEntry& a = cfg.algorithms[0];
  CHECK(a.label == "fast");
  CHECK(a.solver.algorithm == Algorithm::ispalm);
  CHECK(a.solver.s1 == 2.5);
  CHECK(a.solver.s2 == 0.4);
  CHECK(a.solver.batch_size == 12);
  CHECK(a.solver.sarah_p == 8.0);
  CHECK(a.solver.epochs == 4);
  CHECK(a.solver.steps_per_epoch == 3);
  CHECK(a.solver.lipschitz_floor == 1e-5);
  CHECK(a.solver.fd_step_scale == 1e-3);

  // defaults untouched for the other problems
  CHECK(cfg.tmm.n == 2000);
  CHECK(cfg.quadratic.sizes == std::vector<std::int64_t>{4, 3});
}

TEST_CASE("config: label defaults to the algorithm name") {
  TempDir dir("tmp_harness_cfg");
  const std::string path = dir.file("exp.json");
  write_file(path, R"({
    "algorithms": [{"algorithm": "ipalm", "s1": 3.0}]
  })");
  const ExperimentConfig cfg = load_config(path);
  REQUIRE(cfg.algorithms.size() == 1);
  CHECK(cfg.algorithms[0].label == "ipalm");
}

TEST_CASE("config: unknown keys are rejected at every level") {
  TempDir dir("tmp_harness_cfg");
  const std::string path = dir.file("exp.json");
  const std::string algs =
      R"("algorithms": [{"algorithm": "palm", "s1": 1.0}])";

  write_file(path, R"({"problme": "tmm", )" + algs + "}");
  CHECK_THROWS_AS(load_config(path), FormatError);

  write_file(path,
             R"({"algorithms": [{"algorithm": "palm", "s1": 1.0, "step": 2}]})");
  CHECK_THROWS_AS(load_config(path), FormatError);

  write_file(path, R"({"tmm": {"samples": 10}, )" + algs + "}");
  CHECK_THROWS_AS(load_config(path), FormatError);

  write_file(path, R"({"pnn": {"width": [3]}, )" + algs + "}");
  CHECK_THROWS_AS(load_config(path), FormatError);

  write_file(path, R"({"quadratic": {"m": 10}, )" + algs + "}");
  CHECK_THROWS_AS(load_config(path), FormatError);

  // the error message names the offending key
  write_file(path, R"({"problme": "tmm", )" + algs + "}");
  try {
    load_config(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("problme") != std::string::npos);
  }
}

TEST_CASE("config: malformed json and missing fields") {
  TempDir dir("tmp_harness_cfg");
  const std::string path = dir.file("exp.json");

  write_file(path, "{ not json");
  CHECK_THROWS_AS(load_config(path), FormatError);

  // an algorithm entry without an algorithm name
  write_file(path, R"({"algorithms": [{"s1": 1.0}]})");
  CHECK_THROWS_AS(load_config(path), FormatError);

  // wrong type for a field
  write_file(path, R"({"seeds": "one", "algorithms": [{"algorithm": "palm"}]})");
  CHECK_THROWS_AS(load_config(path), FormatError);

  CHECK_THROWS_AS(load_config(dir.file("nonexistent.json")), Error);
}

TEST_CASE("config: validation rejects bad values") {
  ExperimentConfig cfg = quadratic_config("out");
  CHECK_NOTHROW(validate_config(cfg));

  ExperimentConfig bad = cfg;
  bad.problem = "svm";
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.output_dir.clear();
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.data.clear();
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.seeds.clear();
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.seeds = {1, 2, 1};
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.algorithms.clear();
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.algorithms[1].label = "palm";  // duplicate
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.algorithms[0].label.clear();
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.algorithms[0].solver.s1 = 0.0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);

  bad = cfg;
  bad.algorithms[0].solver.epochs = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("config: resolved json is deterministic and reload-stable") {
  TempDir dir("tmp_harness_cfg");
  const ExperimentConfig cfg = quadratic_config("out");
  const std::string once = config_to_json(cfg);
  CHECK(once == config_to_json(cfg));

  const std::string path = dir.file("resolved.json");
  save_config(path, cfg);
  CHECK(read_file(path) == once);
  const ExperimentConfig reloaded = load_config(path);
  CHECK(config_to_json(reloaded) == once);
}

// ---------------------------------------------------------------------------
// CSV traces
// ---------------------------------------------------------------------------

TEST_CASE("csv: raw schema is exact and doubles round-trip") {
  TempDir dir("tmp_harness_csv");
  std::vector<TraceRow> rows(2);
  rows[0] = {0, 1.0 / 3.0, 0.1234567890123456789, 0.25, 42, "ok"};
  rows[1] = {1, -2.5e-300, 7.0, 0.5, 42, "numerical_error"};
  const std::string path = dir.file("raw.csv");
  write_raw_csv(path, rows);

  const std::vector<std::string> lines = split(read_file(path), '\n');
  REQUIRE(lines.size() == 4);  // header + 2 rows + trailing newline
  CHECK(lines[0] == "epoch,objective,grad_sq_norm,wall_seconds,seed,status");
  CHECK(lines[3].empty());

  const std::vector<std::string> f0 = split(lines[1], ',');
  REQUIRE(f0.size() == 6);
  CHECK(f0[0] == "0");
  CHECK(std::stod(f0[1]) == 1.0 / 3.0);  // %.17g reproduces the bits
  CHECK(std::stod(f0[2]) == 0.1234567890123456789);
  CHECK(f0[4] == "42");
  CHECK(f0[5] == "ok");
  const std::vector<std::string> f1 = split(lines[2], ',');
  CHECK(std::stod(f1[1]) == -2.5e-300);
  CHECK(f1[5] == "numerical_error");

  CHECK(no_leftover_temp_files(dir.path));
}

TEST_CASE("csv: aggregate write/read round trip is bitwise") {
  TempDir dir("tmp_harness_csv");
  Rng r(7, "csv");
  std::vector<AggregateRow> rows;
  for (int e = 0; e <= 10; ++e) {
    AggregateRow row;
    row.epoch = e;
    row.mean_obj = r.normal() * 1e3;
    row.std_obj = std::abs(r.normal());
    row.mean_grad_sq = std::abs(r.normal()) * 1e-8;
    row.mean_wall = std::abs(r.normal());
    rows.push_back(row);
  }
  const std::string path = dir.file("agg.csv");
  write_aggregate_csv(path, rows);
  CHECK(split(read_file(path), '\n')[0] ==
        "epoch,mean_obj,std_obj,mean_grad_sq,mean_wall");

  const std::vector<AggregateRow> back = read_aggregate_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].epoch == rows[i].epoch);
    CHECK(back[i].mean_obj == rows[i].mean_obj);
    CHECK(back[i].std_obj == rows[i].std_obj);
    CHECK(back[i].mean_grad_sq == rows[i].mean_grad_sq);
    CHECK(back[i].mean_wall == rows[i].mean_wall);
  }
}

TEST_CASE("csv: aggregation matches a brute-force recomputation") {
  Rng r(11, "agg");
  // ragged traces: one run "aborted" after 3 rows
  std::vector<std::vector<TraceRow>> traces(4);
  const std::size_t lens[] = {6, 6, 3, 6};
  for (std::size_t t = 0; t < traces.size(); ++t)
    for (std::size_t e = 0; e < lens[t]; ++e) {
      TraceRow row;
      row.epoch = static_cast<int>(e);
      row.objective = r.normal();
      row.grad_sq_norm = std::abs(r.normal());
      row.wall_seconds = std::abs(r.normal());
      row.seed = t;
      traces[t].push_back(row);
    }

  const std::vector<AggregateRow> agg = aggregate_traces(traces);
  REQUIRE(agg.size() == 6);
  for (std::size_t e = 0; e < agg.size(); ++e) {
    // reference statistics accumulated in a different (reverse) order
    std::vector<double> obj, grad, wall;
    for (std::size_t t = traces.size(); t-- > 0;) {
      if (e >= traces[t].size()) continue;
      obj.push_back(traces[t][e].objective);
      grad.push_back(traces[t][e].grad_sq_norm);
      wall.push_back(traces[t][e].wall_seconds);
    }
    REQUIRE(obj.size() == (e < 3 ? 4u : 3u));
    const auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    const double mo = mean(obj);
    double var = 0.0;
    for (double x : obj) var += (x - mo) * (x - mo);
    var /= static_cast<double>(obj.size() - 1);

    CHECK(agg[e].epoch == static_cast<int>(e));
    CHECK(std::abs(agg[e].mean_obj - mo) <= 1e-12);
    CHECK(std::abs(agg[e].std_obj - std::sqrt(var)) <= 1e-12);
    CHECK(std::abs(agg[e].mean_grad_sq - mean(grad)) <= 1e-12);
    CHECK(std::abs(agg[e].mean_wall - mean(wall)) <= 1e-12);
    CHECK(agg[e].std_obj >= 0.0);
  }

  // single trace: std is defined as zero
  const std::vector<AggregateRow> solo =
      aggregate_traces({std::vector<TraceRow>(traces[0])});
  for (const AggregateRow& row : solo) CHECK(row.std_obj == 0.0);

  CHECK_THROWS_AS(aggregate_traces({}), ConfigError);
}

TEST_CASE("csv: strict reader rejects malformed aggregate files") {
  TempDir dir("tmp_harness_csv");
  const std::string path = dir.file("bad.csv");
  const std::string header = "epoch,mean_obj,std_obj,mean_grad_sq,mean_wall\n";

  write_file(path, "epoch,objective\n0,1\n");
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  write_file(path, header + "0,1.0,2.0,3.0\n");  // 4 columns
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  write_file(path, header + "0,1.0,2.0,3.0,oops\n");
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  write_file(path, header + "0,1.5x,2.0,3.0,4.0\n");  // trailing junk
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  write_file(path, header);  // no data rows
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  write_file(path, "");
  CHECK_THROWS_AS(read_aggregate_csv(path), FormatError);

  // the error carries the line number and a byte offset into the file
  write_file(path, header + "0,1.0,2.0,3.0,4.0\nbroken\n");
  try {
    read_aggregate_csv(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(e.byte_offset() == header.size() + 18);
  }

  // windows line endings are tolerated
  write_file(path,
             "epoch,mean_obj,std_obj,mean_grad_sq,mean_wall\r\n"
             "0,1.0,2.0,3.0,4.0\r\n");
  const std::vector<AggregateRow> rows = read_aggregate_csv(path);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_obj == 1.0);
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

TEST_CASE("gen-data: mixture files are complete, valid, and reproducible") {
  TempDir dir("tmp_harness_gen_tmm");
  ExperimentConfig cfg;
  cfg.problem = "tmm";
  cfg.output_dir = dir.path.string();
  cfg.tmm.n = 120;
  cfg.tmm.d = 2;
  cfg.tmm.K = 3;
  cfg.algorithms = {make_entry("palm", Algorithm::palm, 3.0, 0, 1, 1)};

  const std::vector<std::string> files = cmd_gen_data(cfg);
  REQUIRE(files.size() == 4);
  for (const std::string& f : files) CHECK(fs::exists(f));
  CHECK(no_leftover_temp_files(dir.path));

  const Dataset data = load_dataset(dir.file("dataset.tmmd"));
  CHECK(data.n == 120);
  CHECK(data.d == 2);

  const TmmParams init = load_params(dir.file("init.json"));
  CHECK(init.K == 3);
  CHECK(init.d == 2);

  // ground truth respects the documented parameter ranges
  const nlohmann::json truth =
      nlohmann::json::parse(read_file(dir.file("ground_truth.json")));
  const std::vector<double> alpha = truth.at("alpha");
  const std::vector<double> nu = truth.at("nu");
  REQUIRE(alpha.size() == 3);
  double alpha_sum = 0.0;
  for (double a : alpha) {
    CHECK(a > 0.0);
    alpha_sum += a;
  }
  CHECK(std::abs(alpha_sum - 1.0) <= 1e-12);
  for (double v : nu) {
    CHECK(v >= 1.0);
    CHECK(v <= 100.0);
  }

  // a second run reproduces every file byte for byte
  std::map<std::string, std::string> snapshot;
  for (const std::string& f : files) snapshot[f] = read_file(f);
  for (const std::string& f : files) fs::remove(f);
  cmd_gen_data(cfg);
  for (const std::string& f : files) CHECK(read_file(f) == snapshot[f]);
}

TEST_CASE("gen-data: image files round-trip through the idx format") {
  TempDir dir("tmp_harness_gen_pnn");
  ExperimentConfig cfg;
  cfg.problem = "pnn";
  cfg.output_dir = dir.path.string();
  cfg.pnn.n_train = 60;
  cfg.pnn.n_test = 20;
  cfg.pnn.widths = {8, 6, 5};
  cfg.algorithms = {make_entry("palm", Algorithm::palm, 3.0, 0, 1, 1)};

  const std::vector<std::string> files = cmd_gen_data(cfg);
  REQUIRE(files.size() == 6);
  for (const std::string& f : files) CHECK(fs::exists(f));

  const Tensor train = load_idx(dir.file("train_images.idx"));
  REQUIRE(train.rank() == 3);
  CHECK(train.shape() == std::vector<std::int64_t>{60, 8, 8});
  for (std::int64_t i = 0; i < train.size(); ++i) {
    CHECK(train[i] >= 0.0);
    CHECK(train[i] <= 1.0);
  }
  const Tensor labels = load_idx(dir.file("train_labels.idx"));
  REQUIRE(labels.rank() == 1);
  CHECK(labels.size() == 60);
  for (std::int64_t i = 0; i < labels.size(); ++i) {
    CHECK(labels[i] >= 0.0);
    CHECK(labels[i] <= 9.0);
    CHECK(labels[i] == std::floor(labels[i]));
  }
  const Tensor test = load_idx(dir.file("test_images.idx"));
  CHECK(test.shape() == std::vector<std::int64_t>{20, 8, 8});

  const PnnWeights init = load_weights(dir.file("init_weights.json"));
  CHECK(init.d == 64);
  CHECK(init.widths == std::vector<std::int64_t>{8, 6, 5});

  std::map<std::string, std::string> snapshot;
  for (const std::string& f : files) snapshot[f] = read_file(f);
  cmd_gen_data(cfg);
  for (const std::string& f : files) CHECK(read_file(f) == snapshot[f]);
}

TEST_CASE("gen-data: quadratic problems have no files to generate") {
  ExperimentConfig cfg = quadratic_config("tmp_harness_gen_quad");
  CHECK_THROWS_AS(cmd_gen_data(cfg), ConfigError);
  fs::remove_all("tmp_harness_gen_quad");
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

TEST_CASE("run: one raw file per (algorithm, seed) and one aggregate each") {
  TempDir dir("tmp_harness_run");
  const ExperimentConfig cfg = quadratic_config(dir.path.string());
  const RunOutput out = cmd_run(cfg);

  CHECK(fs::exists(out.config_file));
  REQUIRE(out.algorithms.size() == 2);
  for (const AlgorithmSummary& a : out.algorithms) {
    REQUIRE(a.raw_files.size() == 3);  // one per seed
    REQUIRE(a.final_objectives.size() == 3);
    CHECK(a.final_test_accuracy.empty());  // not a classification problem
    for (const std::string& f : a.raw_files) {
      const std::vector<std::string> lines = split(read_file(f), '\n');
      CHECK(lines.size() == 8);  // header + (epochs + 1) rows + newline
    }
    const std::vector<AggregateRow> agg = read_aggregate_csv(a.aggregate_file);
    CHECK(agg.size() == 6);  // epochs + 1

    // final mean matches the per-seed finals
    double mean = 0.0;
    for (double v : a.final_objectives) mean += v;
    mean /= 3.0;
    CHECK(std::abs(a.final_mean_obj - mean) <= 1e-15);
  }
  CHECK(out.algorithms[0].raw_files[0] == dir.file("palm_seed1.csv"));
  CHECK(out.algorithms[1].aggregate_file == dir.file("spring_aggregate.csv"));
  CHECK(no_leftover_temp_files(dir.path));
}

TEST_CASE("run: deterministic traces modulo the timing columns") {
  TempDir dir1("tmp_harness_det1");
  TempDir dir2("tmp_harness_det2");
  ExperimentConfig cfg;
  cfg.problem = "tmm";
  cfg.seeds = {1, 2};
  cfg.tmm.n = 150;
  cfg.tmm.d = 2;
  cfg.tmm.K = 2;
  cfg.algorithms = {
      make_entry("palm", Algorithm::palm, 3.0, 0, 3, 2),
      make_entry("spring", Algorithm::spring, 3.0, 30, 3, 2),
  };

  cfg.output_dir = dir1.path.string();
  const RunOutput out1 = cmd_run(cfg);
  cfg.output_dir = dir2.path.string();
  const RunOutput out2 = cmd_run(cfg);

  REQUIRE(out1.algorithms.size() == out2.algorithms.size());
  for (std::size_t a = 0; a < out1.algorithms.size(); ++a) {
    const AlgorithmSummary& s1 = out1.algorithms[a];
    const AlgorithmSummary& s2 = out2.algorithms[a];
    for (std::size_t i = 0; i < s1.raw_files.size(); ++i)
      CHECK(drop_column(read_file(s1.raw_files[i]), 3) ==
            drop_column(read_file(s2.raw_files[i]), 3));
    CHECK(drop_column(read_file(s1.aggregate_file), 4) ==
          drop_column(read_file(s2.aggregate_file), 4));
  }
}

TEST_CASE("run: full-batch alternating minimization never increases the loss") {
  TempDir dir("tmp_harness_descent");
  ExperimentConfig cfg;
  cfg.problem = "tmm";
  cfg.output_dir = dir.path.string();
  cfg.seeds = {5};
  cfg.tmm.n = 200;
  cfg.tmm.d = 2;
  cfg.tmm.K = 3;
  cfg.algorithms = {make_entry("palm", Algorithm::palm, 3.0, 0, 10, 2)};

  const RunOutput out = cmd_run(cfg);
  const std::vector<std::string> lines =
      split(read_file(out.algorithms[0].raw_files[0]), '\n');
  REQUIRE(lines.size() >= 12);
  double prev = std::stod(split(lines[1], ',')[1]);
  for (std::size_t i = 2; i + 1 < lines.size(); ++i) {
    const double obj = std::stod(split(lines[i], ',')[1]);
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }
}

TEST_CASE("run: a generated dataset and its on-disk copy give identical traces") {
  TempDir data_dir("tmp_harness_file_data");
  TempDir out1("tmp_harness_file_out1");
  TempDir out2("tmp_harness_file_out2");

  ExperimentConfig cfg;
  cfg.problem = "tmm";
  cfg.seeds = {3};
  cfg.tmm.n = 100;
  cfg.tmm.d = 2;
  cfg.tmm.K = 2;
  cfg.algorithms = {make_entry("spring", Algorithm::spring, 3.0, 25, 3, 2)};

  cfg.output_dir = data_dir.path.string();
  cmd_gen_data(cfg);

  cfg.output_dir = out1.path.string();
  const RunOutput gen_run = cmd_run(cfg);

  cfg.data = data_dir.path.string();
  cfg.output_dir = out2.path.string();
  const RunOutput file_run = cmd_run(cfg);

  CHECK(drop_column(read_file(gen_run.algorithms[0].raw_files[0]), 3) ==
        drop_column(read_file(file_run.algorithms[0].raw_files[0]), 3));
}

TEST_CASE("run: classification runs report held-out accuracy") {
  TempDir dir("tmp_harness_run_pnn");
  ExperimentConfig cfg;
  cfg.problem = "pnn";
  cfg.output_dir = dir.path.string();
  cfg.seeds = {1};
  cfg.pnn.n_train = 80;
  cfg.pnn.n_test = 40;
  cfg.pnn.widths = {8, 6, 5};
  cfg.algorithms = {make_entry("spring", Algorithm::spring, 3.0, 20, 2, 2)};

  const RunOutput out = cmd_run(cfg);
  REQUIRE(out.algorithms.size() == 1);
  REQUIRE(out.algorithms[0].final_test_accuracy.size() == 1);
  const double acc = out.algorithms[0].final_test_accuracy[0];
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

// ---------------------------------------------------------------------------
// grad-check
// ---------------------------------------------------------------------------

TEST_CASE("grad-check: analytic gradients agree with finite differences") {
  for (const std::string problem : {"tmm", "pnn", "quadratic"}) {
    ExperimentConfig cfg;
    cfg.problem = problem;
    cfg.algorithms = {make_entry("palm", Algorithm::palm, 3.0, 0, 1, 1)};
    const GradCheckReport report = cmd_grad_check(cfg);
    CHECK(report.ok);
    CHECK(!report.blocks.empty());
    for (const auto& [name, err] : report.blocks) {
      INFO(problem, " block ", name);
      CHECK(err <= 1e-5);
    }
  }
}

TEST_CASE("grad-check: a corrupted analytic gradient is flagged") {
  for (const std::string problem : {"tmm", "pnn"}) {
    ExperimentConfig cfg;
    cfg.problem = problem;
    cfg.algorithms = {make_entry("palm", Algorithm::palm, 3.0, 0, 1, 1)};
    const GradCheckReport report = cmd_grad_check(cfg, 1);
    CHECK(!report.ok);
    CHECK(report.blocks[1].second > report.threshold);
  }
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

namespace {

void write_aggregate(const std::string& path, const std::vector<double>& objs) {
  std::vector<AggregateRow> rows;
  for (std::size_t e = 0; e < objs.size(); ++e) {
    AggregateRow r;
    r.epoch = static_cast<int>(e);
    r.mean_obj = objs[e];
    rows.push_back(r);
  }
  write_aggregate_csv(path, rows);
}

}  // namespace

TEST_CASE("compare: ranks by final objective and finds the reach epoch") {
  TempDir dir("tmp_harness_cmp");
  write_aggregate(dir.file("algA_aggregate.csv"), {10, 8, 6, 5, 4, 4});
  write_aggregate(dir.file("algB_aggregate.csv"), {10, 9, 8, 7, 6, 5});

  const CompareReport report = cmd_compare(
      {dir.file("algA_aggregate.csv"), dir.file("algB_aggregate.csv")});
  REQUIRE(report.entries.size() == 2);
  CHECK(report.entries[0].name == "algA");
  CHECK(report.entries[0].final_mean_obj == 4.0);
  CHECK(report.entries[0].rank == 1);
  CHECK(report.entries[0].reach_epoch == 4);  // first value <= 4.04
  CHECK(report.entries[1].name == "algB");
  CHECK(report.entries[1].rank == 2);
  CHECK(report.entries[1].reach_epoch == 5);  // never reaches; final epoch
  CHECK(report.table.find("algA") != std::string::npos);
  CHECK(report.table.find("algB") != std::string::npos);
  CHECK(report.table.find("rank") != std::string::npos);
}

TEST_CASE("compare: identical histories tie") {
  TempDir dir("tmp_harness_cmp");
  write_aggregate(dir.file("one_aggregate.csv"), {3, 2, 1});
  write_aggregate(dir.file("two_aggregate.csv"), {3, 2, 1});
  const CompareReport report = cmd_compare(
      {dir.file("one_aggregate.csv"), dir.file("two_aggregate.csv")});
  CHECK(report.entries[0].rank == 1);
  CHECK(report.entries[1].rank == 1);
  CHECK(report.entries[0].reach_epoch == report.entries[1].reach_epoch);
}

TEST_CASE("compare: negative-objective thresholds move the right way") {
  TempDir dir("tmp_harness_cmp");
  // best final is -10; the 1% band is [-10, -9.9]
  write_aggregate(dir.file("down_aggregate.csv"), {0, -9.95, -10});
  write_aggregate(dir.file("up_aggregate.csv"), {0, -5, -9.91});
  const CompareReport report = cmd_compare(
      {dir.file("down_aggregate.csv"), dir.file("up_aggregate.csv")});
  CHECK(report.entries[0].rank == 1);
  CHECK(report.entries[0].reach_epoch == 1);  // -9.95 is within the band
  CHECK(report.entries[1].rank == 2);
  CHECK(report.entries[1].reach_epoch == 2);
}

TEST_CASE("compare: input validation") {
  TempDir dir("tmp_harness_cmp");
  write_aggregate(dir.file("solo_aggregate.csv"), {1, 0});
  CHECK_THROWS_AS(cmd_compare({dir.file("solo_aggregate.csv")}), ConfigError);
  CHECK_THROWS_AS(cmd_compare({}), ConfigError);

  write_file(dir.file("bad.csv"), "nope\n");
  CHECK_THROWS_AS(
      cmd_compare({dir.file("solo_aggregate.csv"), dir.file("bad.csv")}),
      FormatError);
}
