#include "catopt/baselines.hpp"

#include "catopt/errors.hpp"

namespace catopt {

namespace {

BaselineResult finalize(EvaluationLedger& ledger, TrajectoryBuilder& traj,
                        std::string reason, const RunCallbacks& callbacks) {
  BaselineResult result;
  result.trajectory = traj.finish();
  result.termination_reason = std::move(reason);
  result.real_evals = ledger.real_eval_count();
  if (ledger.elitist()) {
    result.final_fitness = ledger.elitist()->fitness;
    result.final_genotype = ledger.key_for(ledger.elitist()->genotype);
  }
  if (callbacks.on_termination) {
    callbacks.on_termination(result.termination_reason);
  }
  return result;
}

}  // namespace

BaselineResult random_search(const ProblemSpec& spec, const FitnessFn& fitness,
                             long budget, std::optional<double> time_limit_s,
                             uint64_t seed, const RunCallbacks& callbacks) {
  spec.validate();
  EvaluationLedger ledger(spec, budget, time_limit_s);
  TrajectoryBuilder traj(ledger, seed, callbacks.on_elitist_improved);
  Rng rng(seed);
  std::string reason = "budget_exhausted";
  try {
    while (!ledger.budget_exhausted()) {
      if (ledger.time_limit_exceeded()) {
        reason = "time_limit";
        break;
      }
      Solution s;
      s.genotype = random_genotype(spec, rng);
      evaluate_real(s, ledger, fitness);
    }
  } catch (const BudgetExhausted&) {
    reason = "budget_exhausted";
  } catch (const TimeLimitExceeded&) {
    reason = "time_limit";
  }
  return finalize(ledger, traj, std::move(reason), callbacks);
}

BaselineResult local_search(const ProblemSpec& spec, const FitnessFn& fitness,
                            long budget, std::optional<double> time_limit_s,
                            uint64_t seed, const RunCallbacks& callbacks) {
  spec.validate();
  EvaluationLedger ledger(spec, budget, time_limit_s);
  TrajectoryBuilder traj(ledger, seed, callbacks.on_elitist_improved);
  Rng rng(seed);
  std::string reason = "budget_exhausted";
  std::vector<RestartStats> restarts;
  try {
    while (!ledger.budget_exhausted()) {
      if (ledger.time_limit_exceeded()) {
        reason = "time_limit";
        break;
      }
      RestartStats stats;
      stats.start_evals = ledger.real_eval_count();
      Solution s;
      s.genotype = random_genotype(spec, rng);
      evaluate_real(s, ledger, fitness);
      bool improved = true;
      while (improved) {
        improved = false;
        const std::vector<size_t> order =
            rng.permutation(static_cast<size_t>(spec.num_vars));
        for (const size_t vi : order) {
          const int original = s.genotype[vi];
          for (int value = 0; value < spec.alphabet_size; ++value) {
            if (value == original) continue;
            Solution candidate;
            candidate.genotype = s.genotype;
            candidate.genotype[vi] = value;
            const double fv = evaluate_real(candidate, ledger, fitness);
            if (fv > *s.fitness) {
              s = std::move(candidate);
              improved = true;
              break;
            }
          }
        }
      }
      stats.end_evals = ledger.real_eval_count();
      stats.best_fitness = *s.fitness;
      restarts.push_back(stats);
    }
  } catch (const BudgetExhausted&) {
    reason = "budget_exhausted";
  } catch (const TimeLimitExceeded&) {
    reason = "time_limit";
  }
  BaselineResult result = finalize(ledger, traj, std::move(reason), callbacks);
  result.restarts = std::move(restarts);
  return result;
}

}  // namespace catopt
