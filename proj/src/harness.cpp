#include "catopt/harness.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <thread>

#include "catopt/errors.hpp"
#include "catopt/trajectory.hpp"

namespace catopt {

using nlohmann::json;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::random_search: return "random-search";
    case Algorithm::local_search: return "local-search";
    case Algorithm::p3: return "p3";
    case Algorithm::sa_p3: return "sa-p3";
  }
  return "p3";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "random-search" || name == "rs") return Algorithm::random_search;
  if (name == "local-search" || name == "ls") return Algorithm::local_search;
  if (name == "p3") return Algorithm::p3;
  if (name == "sa-p3") return Algorithm::sa_p3;
  throw ConfigError("unknown algorithm: " + name);
}

std::string fitness_kind_name(FitnessKind k) {
  switch (k) {
    case FitnessKind::categorical_onemax: return "onemax";
    case FitnessKind::trap: return "trap";
    case FitnessKind::partition_ensemble: return "partition";
  }
  return "onemax";
}

FitnessKind parse_fitness_kind(const std::string& name) {
  if (name == "onemax") return FitnessKind::categorical_onemax;
  if (name == "trap") return FitnessKind::trap;
  if (name == "partition") return FitnessKind::partition_ensemble;
  throw ConfigError("unknown problem: " + name);
}

std::string regressor_name(RegressorKind k) {
  return k == RegressorKind::svr ? "svr" : "rf";
}

RegressorKind parse_regressor(const std::string& name) {
  if (name == "svr") return RegressorKind::svr;
  if (name == "rf" || name == "random-forest") return RegressorKind::random_forest;
  throw ConfigError("unknown surrogate regressor: " + name);
}

namespace {

ProblemSpec spec_from_config(const ExperimentConfig& c) {
  ProblemSpec spec;
  spec.num_vars = c.num_vars;
  spec.alphabet_size = c.alphabet_size;
  spec.kind = c.problem;
  spec.trap_block = c.trap_block;
  return spec;
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  spec_from_config(c).validate();
  if (c.runs < 1) throw ConfigError("runs must be >= 1");
  if (c.budget < 1) throw ConfigError("budget must be >= 1");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (c.eta <= 0.0 || c.eta > 1.0) throw ConfigError("eta must be in (0, 1]");
  if (c.time_limit_s && *c.time_limit_s <= 0.0) {
    throw ConfigError("time limit must be positive");
  }
  if (c.out_dir.empty()) throw ConfigError("output directory must be set");
  if (c.problem == FitnessKind::partition_ensemble) {
    if (c.dataset_path.empty()) {
      throw ConfigError("partition problems need a dataset file");
    }
    if (c.validation_size < 1 || c.test_size < 1) {
      throw ConfigError("validation and test sizes must be >= 1");
    }
  }
  if (c.algorithm == Algorithm::sa_p3 && c.budget < c.num_vars) {
    throw ConfigError(
        "surrogate mode needs a budget of at least the number of variables");
  }
}

namespace {

json hyper_to_json(const Hyperparams& h) {
  json j;
  j["kind"] = regressor_name(h.kind);
  if (h.kind == RegressorKind::svr) {
    j["kernel"] = h.svr.kernel == SvrKernel::rbf ? "rbf" : "sigmoid";
    j["c"] = h.svr.c;
    j["epsilon"] = h.svr.epsilon;
    j["gamma"] = h.svr.gamma;
  } else {
    j["num_trees"] = h.rf.num_trees;
    j["min_samples_split"] = h.rf.min_samples_split;
    j["min_samples_leaf"] = h.rf.min_samples_leaf;
    j["ratio_features"] = h.rf.ratio_features;
  }
  return j;
}

RunSummary execute_run(const ExperimentConfig& c, const ProblemSpec& spec,
                       const FitnessFn& fitness, int run_id) {
  RunSummary summary;
  summary.run_id = run_id;
  summary.seed = c.base_seed + static_cast<uint64_t>(run_id);
  summary.trajectory_file = "trajectory_" + std::to_string(run_id) + ".csv";

  std::vector<TrajectoryRecord> records;
  try {
    switch (c.algorithm) {
      case Algorithm::random_search: {
        BaselineResult r = random_search(spec, fitness, c.budget,
                                         c.time_limit_s, summary.seed);
        records = std::move(r.trajectory);
        summary.termination_reason = std::move(r.termination_reason);
        summary.real_evals = r.real_evals;
        summary.final_fitness = r.final_fitness;
        summary.final_genotype = std::move(r.final_genotype);
        break;
      }
      case Algorithm::local_search: {
        BaselineResult r = local_search(spec, fitness, c.budget,
                                        c.time_limit_s, summary.seed);
        records = std::move(r.trajectory);
        summary.termination_reason = std::move(r.termination_reason);
        summary.real_evals = r.real_evals;
        summary.final_fitness = r.final_fitness;
        summary.final_genotype = std::move(r.final_genotype);
        break;
      }
      case Algorithm::p3:
      case Algorithm::sa_p3: {
        P3Options options;
        options.surrogate = c.algorithm == Algorithm::sa_p3;
        options.budget = c.budget;
        options.time_limit_s = c.time_limit_s;
        options.surrogate_kind = c.surrogate;
        options.eta = c.eta;
        RunResult r = run_p3(spec, fitness, options, summary.seed);
        records = std::move(r.trajectory);
        summary.termination_reason = std::move(r.termination_reason);
        summary.real_evals = r.real_evals;
        summary.final_fitness = r.final_fitness;
        summary.final_genotype = std::move(r.final_genotype);
        summary.tuned = r.tuned;
        break;
      }
    }
  } catch (const std::exception& e) {
    summary.error = e.what();
    summary.termination_reason = "error";
  }
  for (auto& rec : records) rec.run_id = run_id;
  try {
    write_trajectory_csv(
        (std::filesystem::path(c.out_dir) / summary.trajectory_file).string(),
        records);
  } catch (const std::exception& e) {
    if (summary.error.empty()) summary.error = e.what();
  }
  return summary;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  std::filesystem::create_directories(config.out_dir);
  const ProblemSpec spec = spec_from_config(config);

  std::shared_ptr<DataSplits> splits;
  std::shared_ptr<Learner> learner;
  FitnessFn fitness;
  switch (config.problem) {
    case FitnessKind::categorical_onemax:
      fitness = [](const Genotype& g) { return categorical_onemax_fitness(g); };
      break;
    case FitnessKind::trap:
      fitness = [k = config.trap_block](const Genotype& g) {
        return trap_fitness(g, k);
      };
      break;
    case FitnessKind::partition_ensemble: {
      SplitSpec split;
      split.train_size = config.num_vars;
      split.validation_size = config.validation_size;
      split.test_size = config.test_size;
      split.seed = config.base_seed;
      splits = std::make_shared<DataSplits>(
          load_and_split(config.dataset_path, split));
      learner = std::make_shared<LogisticLearner>();
      fitness = [splits, learner,
                 alpha = config.alphabet_size](const Genotype& g) {
        return partition_fitness(g, splits->train, splits->validation, alpha,
                                 *learner);
      };
      break;
    }
  }

  std::vector<RunSummary> summaries(config.runs);
  const int workers = std::min(config.workers, config.runs);
  if (workers <= 1) {
    for (int id = 0; id < config.runs; ++id) {
      summaries[id] = execute_run(config, spec, fitness, id);
    }
  } else {
    std::atomic<int> next{0};
    auto work = [&] {
      for (int id = next.fetch_add(1); id < config.runs;
           id = next.fetch_add(1)) {
        summaries[id] = execute_run(config, spec, fitness, id);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  json manifest;
  json jc;
  jc["algorithm"] = algorithm_name(config.algorithm);
  jc["problem"] = fitness_kind_name(config.problem);
  jc["dataset"] = config.dataset_path.empty()
                      ? ""
                      : std::filesystem::path(config.dataset_path)
                            .filename()
                            .string();
  jc["num_vars"] = config.num_vars;
  jc["alphabet_size"] = config.alphabet_size;
  jc["trap_block"] = config.trap_block;
  jc["budget"] = config.budget;
  if (config.time_limit_s) {
    jc["time_limit_s"] = *config.time_limit_s;
  } else {
    jc["time_limit_s"] = nullptr;
  }
  jc["surrogate"] = regressor_name(config.surrogate);
  jc["eta"] = config.eta;
  jc["runs"] = config.runs;
  jc["base_seed"] = config.base_seed;
  jc["validation_size"] = config.validation_size;
  jc["test_size"] = config.test_size;
  manifest["config"] = jc;

  json jruns = json::array();
  for (const auto& s : summaries) {
    json jr;
    jr["run_id"] = s.run_id;
    jr["seed"] = s.seed;
    jr["trajectory_file"] = s.trajectory_file;
    jr["termination_reason"] = s.termination_reason;
    jr["real_evals"] = s.real_evals;
    if (s.final_fitness) {
      jr["final_fitness"] = *s.final_fitness;
    } else {
      jr["final_fitness"] = nullptr;
    }
    jr["final_genotype"] = s.final_genotype;
    if (s.tuned) {
      jr["tuned"] = hyper_to_json(*s.tuned);
    } else {
      jr["tuned"] = nullptr;
    }
    jr["error"] = s.error;
    jruns.push_back(std::move(jr));
  }
  manifest["runs"] = std::move(jruns);

  ExperimentResult result;
  result.runs = std::move(summaries);
  result.manifest_path =
      (std::filesystem::path(config.out_dir) / "manifest.json").string();
  std::ofstream out(result.manifest_path);
  if (!out) throw Error("cannot write manifest: " + result.manifest_path);
  out << manifest.dump(2) << "\n";
  return result;
}

std::vector<AggregateRow> aggregate_trajectories(
    const std::vector<std::string>& trajectory_files,
    const std::vector<long>& checkpoints) {
  if (trajectory_files.empty()) {
    throw EmptyInput("no trajectory files given");
  }
  if (checkpoints.empty()) throw ConfigError("no checkpoints given");
  for (size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1]) {
      throw ConfigError("checkpoints must be strictly ascending");
    }
  }
  std::vector<std::vector<TrajectoryRecord>> runs;
  for (const auto& f : trajectory_files) {
    std::vector<TrajectoryRecord> records = read_trajectory_csv(f);
    if (records.empty()) {
      throw EmptyInput("trajectory file has no records: " + f);
    }
    runs.push_back(std::move(records));
  }

  std::vector<AggregateRow> rows;
  rows.reserve(checkpoints.size());
  for (const long cp : checkpoints) {
    AggregateRow row;
    row.checkpoint = cp;
    row.runs = static_cast<int>(runs.size());
    row.min = std::numeric_limits<double>::infinity();
    row.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& records : runs) {
      double value = records.front().elitist_fitness;
      for (const auto& rec : records) {
        if (rec.real_evals <= cp) value = rec.elitist_fitness;
      }
      sum += value;
      row.min = std::min(row.min, value);
      row.max = std::max(row.max, value);
    }
    row.mean = sum / static_cast<double>(runs.size());
    rows.push_back(row);
  }
  return rows;
}

void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateRow>& rows) {
  out << "checkpoint,mean,min,max,runs\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%d", r.checkpoint,
                  r.mean, r.min, r.max, r.runs);
    out << buf << "\n";
  }
}

double evaluate_on_test(const std::string& trajectory_file,
                        const std::string& dataset_path,
                        std::optional<uint64_t> split_seed_override,
                        std::optional<int> validation_size_override,
                        std::optional<int> test_size_override) {
  const std::vector<TrajectoryRecord> records =
      read_trajectory_csv(trajectory_file);
  if (records.empty()) {
    throw EmptyInput("trajectory file has no records: " + trajectory_file);
  }
  const Genotype g = parse_genotype_key(records.back().elitist_genotype);

  const std::filesystem::path manifest_path =
      std::filesystem::path(trajectory_file).parent_path() / "manifest.json";
  json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in) {
      throw ParseError("cannot open manifest: " + manifest_path.string());
    }
    try {
      in >> manifest;
    } catch (const std::exception& e) {
      throw ParseError("bad manifest " + manifest_path.string() + ": " +
                       e.what());
    }
  }

  std::string problem, dataset_name;
  int num_vars = 0, alphabet = 0, validation_size = 0, test_size = 0;
  uint64_t seed = 0;
  try {
    const json& jc = manifest.at("config");
    problem = jc.at("problem").get<std::string>();
    dataset_name = jc.at("dataset").get<std::string>();
    num_vars = jc.at("num_vars").get<int>();
    alphabet = jc.at("alphabet_size").get<int>();
    validation_size = jc.at("validation_size").get<int>();
    test_size = jc.at("test_size").get<int>();
    seed = jc.at("base_seed").get<uint64_t>();
  } catch (const std::exception& e) {
    throw ParseError("manifest " + manifest_path.string() +
                     " is missing fields: " + e.what());
  }

  if (problem != "partition") {
    throw ConfigError("test evaluation applies to partition problems only");
  }
  if (static_cast<int>(g.size()) != num_vars) {
    throw SplitMismatch("final genotype length does not match the manifest");
  }
  const std::string given_name =
      std::filesystem::path(dataset_path).filename().string();
  if (given_name != dataset_name) {
    throw SplitMismatch("dataset file " + given_name +
                        " does not match the manifest's " + dataset_name);
  }
  if (split_seed_override && *split_seed_override != seed) {
    throw SplitMismatch("split seed differs from the run manifest");
  }
  if (validation_size_override && *validation_size_override != validation_size) {
    throw SplitMismatch("validation size differs from the run manifest");
  }
  if (test_size_override && *test_size_override != test_size) {
    throw SplitMismatch("test size differs from the run manifest");
  }

  SplitSpec split;
  split.train_size = num_vars;
  split.validation_size = validation_size;
  split.test_size = test_size;
  split.seed = seed;
  const DataSplits splits = load_and_split(dataset_path, split);
  const LogisticLearner learner;
  return partition_fitness(g, splits.train, splits.test, alphabet, learner);
}

}  // namespace catopt
