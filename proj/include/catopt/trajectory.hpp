#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "catopt/genotype.hpp"

namespace catopt {

struct TrajectoryRecord {
  int run_id = 0;
  uint64_t seed = 0;
  long real_evals = 0;
  long elapsed_ms = 0;
  double elitist_fitness = 0.0;
  std::string elitist_genotype;  // same comma-joined form as cache keys
};

struct RunCallbacks {
  std::function<void(long real_evals, double fitness, const std::string& key)>
      on_elitist_improved;
  std::function<void(const std::string& reason)> on_termination;
};

// Hooks an EvaluationLedger and collects one record per elitist improvement
// plus a final snapshot. elapsed_ms is measured wall time only when the
// ledger has a time limit; otherwise it is 0 so budget-driven runs rewrite
// byte-identical files.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(EvaluationLedger& ledger, uint64_t seed,
                    EvaluationLedger::ImproveHook forward = nullptr);

  std::vector<TrajectoryRecord> finish();

 private:
  EvaluationLedger* ledger_;
  uint64_t seed_;
  EvaluationLedger::ImproveHook forward_;
  std::vector<TrajectoryRecord> records_;
};

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path);

}  // namespace catopt
