#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "catopt/genotype.hpp"
#include "catopt/linkage.hpp"
#include "catopt/surrogate.hpp"
#include "catopt/trajectory.hpp"

namespace catopt {

// lambda-quantile of a prediction archive: values sorted ascending, entry at
// index ceil(lambda*n)-1, clamped into range. Throws EmptyArchive.
double set_threshold(std::vector<double> predictions, double lambda);

struct PyramidLevel {
  explicit PyramidLevel(const ProblemSpec& spec)
      : counts(spec.num_vars, spec.alphabet_size) {}

  std::vector<Solution> members;
  std::unordered_set<std::string> keys;  // raw genotype keys
  PairCounts counts;
};

struct Pyramid {
  explicit Pyramid(const ProblemSpec& s) : spec(s) {
    levels.emplace_back(spec);
  }

  // false when the genotype is already stored at that level; level ==
  // levels.size() appends a new level
  bool add(size_t level, const Solution& s);

  ProblemSpec spec;
  std::vector<PyramidLevel> levels;
};

// Surrogate side of a run: the evaluated-sample archive, the fitted
// regressor, and the lambda/threshold gate. The archive only appends, keyed
// like the evaluation cache; refits are skipped while it has not grown.
class SurrogateState {
 public:
  SurrogateState(const ProblemSpec& spec, RegressorKind kind, double eta,
                 uint64_t train_seed, bool scale_targets);

  int archive_size() const { return rows_; }
  double lambda() const { return lambda_; }
  double eta() const { return eta_; }
  double threshold() const { return threshold_; }
  const std::optional<Hyperparams>& hyperparams() const { return hyper_; }
  void set_hyperparams(const Hyperparams& h) { hyper_ = h; }

  void add_evaluated(const Genotype& g, double real_fitness,
                     const std::string& key);

  void tune_once(uint64_t seed);
  void refit_and_rethreshold();
  double predict(const Genotype& g) const;

  void on_elitist_improved() { lambda_ = 1.0; }

  // one-shot gate bypass, consumed by the next budget-charged evaluation; the
  // run loop arms it when the gate has starved the budget for too long or the
  // fitted model has gone flat
  void set_force_eval(bool on) { force_eval_ = on; }
  bool force_eval() const { return force_eval_; }

  // true when every archive prediction is the same value, which pins the
  // threshold at that value and closes the strict gate for good
  bool predictions_flat() const;

  // decays lambda by eta on stagnant iterations, then refits (if the archive
  // grew) and recomputes the threshold
  void end_iteration(bool elitist_improved);

  // adopts an externally fitted model plus its archive predictions and
  // recomputes the threshold; also the replay seam used by tests
  void install(std::unique_ptr<Model> model, std::vector<double> predictions);

 private:
  Eigen::VectorXd targets() const;

  ProblemSpec spec_;
  RegressorKind kind_;
  double eta_;
  double lambda_ = 1.0;
  double threshold_ = 0.0;
  bool force_eval_ = false;
  uint64_t train_seed_;
  bool scale_targets_;
  int dim_;

  std::vector<double> fitnesses_;
  std::unordered_set<std::string> keys_;
  Eigen::MatrixXd encoded_;
  int rows_ = 0;

  std::optional<Hyperparams> hyper_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<SvrKernelCache> kcache_;
  std::vector<double> predictions_;
  int fitted_rows_ = -1;
};

// Predicts first, then evaluates for real only on a cache hit (free) or a
// prediction strictly above the threshold; new real evaluations enter the
// archive, and an elitist improvement resets lambda to 1.
void sa_evaluate(Solution& x, SurrogateState& sa, EvaluationLedger& ledger,
                 const FitnessFn& fitness);

// One pyramid pass: a fresh random solution enters level 0, then GOM climbs
// levels (linkage learned per level visit) while the previous level promoted,
// never above the level count captured before the climb. In surrogate mode
// the iteration ends with the lambda/refit/threshold update.
void p3_iteration(Pyramid& pyramid, SurrogateState* sa,
                  EvaluationLedger& ledger, const FitnessFn& fitness,
                  Rng& rng);

struct P3Options {
  bool surrogate = false;
  long budget = 0;
  std::optional<double> time_limit_s;
  RegressorKind surrogate_kind = RegressorKind::svr;
  double eta = 0.999;
};

struct RunResult {
  std::vector<TrajectoryRecord> trajectory;
  // "budget_exhausted", "time_limit", or "search_space_exhausted"
  std::string termination_reason;
  long real_evals = 0;
  long iterations = 0;
  std::optional<double> final_fitness;
  std::string final_genotype;
  std::optional<Hyperparams> tuned;
};

RunResult run_p3(const ProblemSpec& spec, const FitnessFn& fitness,
                 const P3Options& options, uint64_t seed,
                 const RunCallbacks& callbacks = {});

}  // namespace catopt
