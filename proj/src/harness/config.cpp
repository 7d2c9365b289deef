#include "palmkit/harness/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "palmkit/errors.hpp"

namespace palmkit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key))
      throw FormatError("config: unknown key '" + key + "' in " + where, 0);
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SolverConfig solver_from_json(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"label", "algorithm", "s1", "s2", "batch_size", "sarah_p",
                  "epochs", "steps_per_epoch", "lipschitz_floor",
                  "fd_step_scale"},
                 where);
  SolverConfig sc;
  if (!j.contains("algorithm"))
    throw FormatError("config: " + where + " needs an 'algorithm'", 0);
  sc.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
  maybe(j, "s1", sc.s1);
  maybe(j, "s2", sc.s2);
  maybe(j, "batch_size", sc.batch_size);
  maybe(j, "sarah_p", sc.sarah_p);
  maybe(j, "epochs", sc.epochs);
  maybe(j, "steps_per_epoch", sc.steps_per_epoch);
  maybe(j, "lipschitz_floor", sc.lipschitz_floor);
  maybe(j, "fd_step_scale", sc.fd_step_scale);
  return sc;
}

json solver_to_json(const AlgorithmEntry& a) {
  json j;
  j["label"] = a.label;
  j["algorithm"] = algorithm_name(a.solver.algorithm);
  j["s1"] = a.solver.s1;
  j["s2"] = a.solver.s2;
  j["batch_size"] = a.solver.batch_size;
  j["sarah_p"] = a.solver.sarah_p;
  j["epochs"] = a.solver.epochs;
  j["steps_per_epoch"] = a.solver.steps_per_epoch;
  j["lipschitz_floor"] = a.solver.lipschitz_floor;
  j["fd_step_scale"] = a.solver.fd_step_scale;
  return j;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("load_config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config json: ") + e.what(),
                      e.byte > 0 ? static_cast<std::uint64_t>(e.byte) - 1 : 0);
  }

  ExperimentConfig cfg;
  try {
    reject_unknown(j,
                   {"problem", "output_dir", "data", "seeds", "algorithms",
                    "tmm", "pnn", "quadratic"},
                   "the top level");
    maybe(j, "problem", cfg.problem);
    maybe(j, "output_dir", cfg.output_dir);
    maybe(j, "data", cfg.data);
    maybe(j, "seeds", cfg.seeds);
    if (j.contains("algorithms")) {
      if (!j.at("algorithms").is_array())
        throw FormatError("config: 'algorithms' must be an array", 0);
      for (const json& a : j.at("algorithms")) {
        AlgorithmEntry entry;
        entry.solver = solver_from_json(a, "an algorithm entry");
        entry.label = a.contains("label")
                          ? a.at("label").get<std::string>()
                          : algorithm_name(entry.solver.algorithm);
        cfg.algorithms.push_back(std::move(entry));
      }
    }
    if (j.contains("tmm")) {
      const json& t = j.at("tmm");
      reject_unknown(t, {"n", "d", "K", "eps", "data_seed", "init_seed"},
                     "'tmm'");
      maybe(t, "n", cfg.tmm.n);
      maybe(t, "d", cfg.tmm.d);
      maybe(t, "K", cfg.tmm.K);
      maybe(t, "eps", cfg.tmm.eps);
      maybe(t, "data_seed", cfg.tmm.data_seed);
      maybe(t, "init_seed", cfg.tmm.init_seed);
    }
    if (j.contains("pnn")) {
      const json& p = j.at("pnn");
      reject_unknown(p,
                     {"n_train", "n_test", "widths", "noise_sigma",
                      "data_seed", "init_seed"},
                     "'pnn'");
      maybe(p, "n_train", cfg.pnn.n_train);
      maybe(p, "n_test", cfg.pnn.n_test);
      maybe(p, "widths", cfg.pnn.widths);
      maybe(p, "noise_sigma", cfg.pnn.noise_sigma);
      maybe(p, "data_seed", cfg.pnn.data_seed);
      maybe(p, "init_seed", cfg.pnn.init_seed);
    }
    if (j.contains("quadratic")) {
      const json& q = j.at("quadratic");
      reject_unknown(q, {"n", "sizes", "spread", "data_seed", "init_seed"},
                     "'quadratic'");
      maybe(q, "n", cfg.quadratic.n);
      maybe(q, "sizes", cfg.quadratic.sizes);
      maybe(q, "spread", cfg.quadratic.spread);
      maybe(q, "data_seed", cfg.quadratic.data_seed);
      maybe(q, "init_seed", cfg.quadratic.init_seed);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config json: ") + e.what(), 0);
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.problem != "tmm" && cfg.problem != "pnn" &&
      cfg.problem != "quadratic")
    throw ConfigError("config: problem must be tmm, pnn, or quadratic");
  if (cfg.output_dir.empty())
    throw ConfigError("config: output_dir must not be empty");
  if (cfg.data.empty())
    throw ConfigError("config: data must be 'generate' or a directory");
  if (cfg.seeds.empty()) throw ConfigError("config: seeds must be nonempty");
  std::set<std::uint64_t> seen(cfg.seeds.begin(), cfg.seeds.end());
  if (seen.size() != cfg.seeds.size())
    throw ConfigError("config: seeds must be distinct");
  if (cfg.algorithms.empty())
    throw ConfigError("config: need at least one algorithm entry");
  std::set<std::string> labels;
  for (const AlgorithmEntry& a : cfg.algorithms) {
    if (a.label.empty())
      throw ConfigError("config: algorithm labels must not be empty");
    if (!labels.insert(a.label).second)
      throw ConfigError("config: duplicate algorithm label '" + a.label + "'");
    if (a.solver.s1 <= 0.0)
      throw ConfigError("config: s1 must be positive for '" + a.label + "'");
    if (a.solver.epochs < 1 || a.solver.steps_per_epoch < 1)
      throw ConfigError("config: epochs and steps_per_epoch must be >= 1");
  }
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["problem"] = cfg.problem;
  j["output_dir"] = cfg.output_dir;
  j["data"] = cfg.data;
  j["seeds"] = cfg.seeds;
  json algs = json::array();
  for (const AlgorithmEntry& a : cfg.algorithms) algs.push_back(solver_to_json(a));
  j["algorithms"] = algs;
  j["tmm"] = {{"n", cfg.tmm.n},
              {"d", cfg.tmm.d},
              {"K", cfg.tmm.K},
              {"eps", cfg.tmm.eps},
              {"data_seed", cfg.tmm.data_seed},
              {"init_seed", cfg.tmm.init_seed}};
  j["pnn"] = {{"n_train", cfg.pnn.n_train},
              {"n_test", cfg.pnn.n_test},
              {"widths", cfg.pnn.widths},
              {"noise_sigma", cfg.pnn.noise_sigma},
              {"data_seed", cfg.pnn.data_seed},
              {"init_seed", cfg.pnn.init_seed}};
  j["quadratic"] = {{"n", cfg.quadratic.n},
                    {"sizes", cfg.quadratic.sizes},
                    {"spread", cfg.quadratic.spread},
                    {"data_seed", cfg.quadratic.data_seed},
                    {"init_seed", cfg.quadratic.init_seed}};
  return j.dump(2) + "\n";
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw Error("save_config: cannot open '" + path + "'");
  f << config_to_json(cfg);
  if (!f) throw Error("save_config: write failed for '" + path + "'");
}

}  // namespace palmkit
