#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "catopt/errors.hpp"
#include "catopt/rng.hpp"

namespace catopt {

using Genotype = std::vector<int>;

enum class FitnessKind { categorical_onemax, trap, partition_ensemble };

struct ProblemSpec {
  int num_vars = 0;
  int alphabet_size = 2;
  FitnessKind kind = FitnessKind::categorical_onemax;
  int trap_block = 5;

  // partition labelings are equivalence classes; their cache keys are
  // normalized, synthetic problems cache raw genotypes
  bool normalizes() const { return kind == FitnessKind::partition_ensemble; }

  void validate() const;
};

struct Solution {
  Genotype genotype;
  std::optional<double> fitness;
  std::optional<double> surrogate_fitness;
  bool real_fitness_calculated = false;
};

using FitnessFn = std::function<double(const Genotype&)>;

// Relabels genes to first-occurrence order: {1,1,2,2,0,0} -> {0,0,1,1,2,2}.
// Idempotent; equal for any two label-permuted genotypes.
Genotype normalize_partition(const Genotype& g);

// decimal gene values joined by commas: {1,0,11} -> "1,0,11"
std::string genotype_key(const Genotype& g);
Genotype parse_genotype_key(const std::string& key);

Genotype random_genotype(const ProblemSpec& spec, Rng& rng);

// Owns the real-evaluation cache, budget, optional wall-clock limit, and the
// elitist. A genotype (normalized when the problem calls for it) is computed
// and counted at most once; repeats are free cache hits.
class EvaluationLedger {
 public:
  using ImproveHook = std::function<void(long real_evals, double fitness,
                                         const std::string& key)>;

  EvaluationLedger(const ProblemSpec& spec, long budget,
                   std::optional<double> time_limit_s = std::nullopt);

  const ProblemSpec& spec() const { return spec_; }
  long budget() const { return budget_; }
  long real_eval_count() const { return count_; }
  long distinct_evals() const { return static_cast<long>(cache_.size()); }
  bool budget_exhausted() const { return count_ >= budget_; }
  bool has_time_limit() const { return time_limit_s_.has_value(); }
  bool time_limit_exceeded() const;
  long elapsed_ms() const;

  std::string key_for(const Genotype& g) const;
  std::optional<double> cached_fitness(const std::string& key) const;

  const std::optional<Solution>& elitist() const { return elitist_; }
  std::optional<double> elitist_fitness() const;

  void set_improve_hook(ImproveHook hook) { improve_hook_ = std::move(hook); }

  friend double evaluate_real(Solution& s, EvaluationLedger& ledger,
                              const FitnessFn& fitness);

 private:
  ProblemSpec spec_;
  long budget_ = 0;
  long count_ = 0;
  std::optional<double> time_limit_s_;
  std::chrono::steady_clock::time_point start_;
  std::unordered_map<std::string, double> cache_;
  std::optional<Solution> elitist_;
  std::string elitist_key_;
  ImproveHook improve_hook_;
};

// Cache hit: stored value, no budget spent. Miss: throws BudgetExhausted /
// TimeLimitExceeded before computing, rejects non-finite fitness, stores,
// counts, and updates the elitist on strict improvement.
double evaluate_real(Solution& s, EvaluationLedger& ledger,
                     const FitnessFn& fitness);

}  // namespace catopt
