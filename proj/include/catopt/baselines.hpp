#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catopt/genotype.hpp"
#include "catopt/trajectory.hpp"

namespace catopt {

struct RestartStats {
  long start_evals = 0;
  long end_evals = 0;
  double best_fitness = 0.0;
};

struct BaselineResult {
  std::vector<TrajectoryRecord> trajectory;
  std::string termination_reason;
  long real_evals = 0;
  std::optional<double> final_fitness;
  std::string final_genotype;
  std::vector<RestartStats> restarts;  // completed local-search restarts only
};

// uniform random genotypes until the budget or time limit ends the run;
// repeats cost nothing through the evaluation cache
BaselineResult random_search(const ProblemSpec& spec, const FitnessFn& fitness,
                             long budget, std::optional<double> time_limit_s,
                             uint64_t seed, const RunCallbacks& callbacks = {});

// Random-restart first-improvement hill climber: per sweep, variables in a
// fresh random order, alternative values in ascending label order, the first
// strict improvement is kept; sweeps repeat while one improved, then the
// search restarts from a new random genotype.
BaselineResult local_search(const ProblemSpec& spec, const FitnessFn& fitness,
                            long budget, std::optional<double> time_limit_s,
                            uint64_t seed, const RunCallbacks& callbacks = {});

}  // namespace catopt
