#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "catopt/baselines.hpp"
#include "catopt/problems.hpp"
#include "catopt/pyramid.hpp"

namespace catopt {

enum class Algorithm { random_search, local_search, p3, sa_p3 };

std::string algorithm_name(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
std::string fitness_kind_name(FitnessKind k);
FitnessKind parse_fitness_kind(const std::string& name);
std::string regressor_name(RegressorKind k);
RegressorKind parse_regressor(const std::string& name);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::p3;
  FitnessKind problem = FitnessKind::categorical_onemax;
  std::string dataset_path;  // partition problems only
  int num_vars = 20;
  int alphabet_size = 2;
  int trap_block = 5;
  long budget = 5000;
  std::optional<double> time_limit_s;
  RegressorKind surrogate = RegressorKind::svr;
  double eta = 0.999;
  int runs = 1;
  uint64_t base_seed = 42;
  std::string out_dir = "results";
  int validation_size = 500;
  int test_size = 500;
  int workers = 1;
};

void validate_config(const ExperimentConfig& config);

struct RunSummary {
  int run_id = 0;
  uint64_t seed = 0;
  std::string trajectory_file;
  std::string termination_reason;
  long real_evals = 0;
  std::optional<double> final_fitness;
  std::string final_genotype;
  std::optional<Hyperparams> tuned;
  std::string error;  // nonempty when the run failed
};

struct ExperimentResult {
  std::vector<RunSummary> runs;
  std::string manifest_path;
};

// Runs `runs` independent searches with seeds base_seed + run_id, writing one
// trajectory CSV per run plus manifest.json into out_dir. Partition datasets
// are split once with base_seed and shared by every run; a failing run is
// recorded and does not stop its siblings. Reruns of the same config produce
// byte-identical files.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct AggregateRow {
  long checkpoint = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int runs = 0;
};

// Per checkpoint, each run contributes its last recorded fitness at or before
// that many real evaluations (its first record when none is). Checkpoints
// must be strictly ascending.
std::vector<AggregateRow> aggregate_trajectories(
    const std::vector<std::string>& trajectory_files,
    const std::vector<long>& checkpoints);

void write_aggregate_csv(std::ostream& out,
                         const std::vector<AggregateRow>& rows);

// Reads the final genotype of a trajectory, re-derives the experiment's data
// split from the manifest.json next to it, and scores the genotype's ensemble
// on the held-out test rows. Explicit overrides that contradict the manifest
// raise SplitMismatch.
double evaluate_on_test(const std::string& trajectory_file,
                        const std::string& dataset_path,
                        std::optional<uint64_t> split_seed_override = {},
                        std::optional<int> validation_size_override = {},
                        std::optional<int> test_size_override = {});

}  // namespace catopt
