#include "catopt/pyramid.hpp"

#include <algorithm>
#include <cmath>

#include "catopt/errors.hpp"
#include "catopt/gom.hpp"

namespace catopt {

double set_threshold(std::vector<double> predictions, double lambda) {
  if (predictions.empty()) throw EmptyArchive();
  std::sort(predictions.begin(), predictions.end());
  const long n = static_cast<long>(predictions.size());
  long idx = static_cast<long>(std::ceil(lambda * static_cast<double>(n))) - 1;
  idx = std::clamp(idx, 0L, n - 1);
  return predictions[idx];
}

bool Pyramid::add(size_t level, const Solution& s) {
  if (level == levels.size()) levels.emplace_back(spec);
  PyramidLevel& lv = levels[level];
  if (!lv.keys.insert(genotype_key(s.genotype)).second) return false;
  lv.members.push_back(s);
  lv.counts.add(s.genotype);
  return true;
}

SurrogateState::SurrogateState(const ProblemSpec& spec, RegressorKind kind,
                               double eta, uint64_t train_seed,
                               bool scale_targets)
    : spec_(spec),
      kind_(kind),
      eta_(eta),
      train_seed_(train_seed),
      scale_targets_(scale_targets),
      dim_(spec.num_vars * spec.alphabet_size) {
  if (eta_ <= 0.0 || eta_ > 1.0) throw ConfigError("eta must be in (0, 1]");
}

void SurrogateState::add_evaluated(const Genotype& g, double real_fitness,
                                   const std::string& key) {
  if (!keys_.insert(key).second) return;
  if (rows_ == encoded_.rows()) {
    encoded_.conservativeResize(std::max(16, 2 * rows_), dim_);
  }
  encoded_.row(rows_) = one_hot_encode(g, spec_.alphabet_size).transpose();
  fitnesses_.push_back(real_fitness);
  if (kcache_) kcache_->append(encoded_.row(rows_).transpose());
  ++rows_;
}

Eigen::VectorXd SurrogateState::targets() const {
  Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(fitnesses_.data(), rows_);
  if (!scale_targets_ || rows_ == 0) return y;
  const double lo = y.minCoeff();
  const double hi = y.maxCoeff();
  if (hi > lo) {
    y = (y.array() - lo) / (hi - lo);
  } else {
    y.setZero();
  }
  return y;
}

void SurrogateState::tune_once(uint64_t seed) {
  const TuneResult tuned =
      tune_hyperparameters(kind_, encoded_.topRows(rows_), targets(), seed);
  hyper_ = tuned.best;
}

void SurrogateState::refit_and_rethreshold() {
  if (fitted_rows_ != rows_) {
    if (!hyper_) throw ConfigError("surrogate model used before tuning");
    if (rows_ < 2) throw TooFewSamples("surrogate refit needs at least 2 samples");
    const Eigen::VectorXd y = targets();
    if (kind_ == RegressorKind::svr) {
      if (!kcache_) {
        const double gamma = hyper_->svr.gamma > 0.0
                                 ? hyper_->svr.gamma
                                 : 1.0 / static_cast<double>(dim_);
        kcache_ = std::make_unique<SvrKernelCache>(hyper_->svr.kernel, gamma,
                                                   dim_);
        for (int r = 0; r < rows_; ++r) {
          kcache_->append(encoded_.row(r).transpose());
        }
      }
      const SvrFit fit = smo_solve(kcache_->kernel_matrix(), y,
                                   hyper_->svr.c, hyper_->svr.epsilon);
      std::vector<int> sv;
      for (int i = 0; i < rows_; ++i) {
        if (std::abs(fit.beta[i]) > 1e-12) sv.push_back(i);
      }
      Eigen::MatrixXd sx(static_cast<Eigen::Index>(sv.size()), dim_);
      Eigen::VectorXd sb(static_cast<Eigen::Index>(sv.size()));
      for (size_t s = 0; s < sv.size(); ++s) {
        sx.row(s) = encoded_.row(sv[s]);
        sb[s] = fit.beta[sv[s]];
      }
      Eigen::VectorXd f = Eigen::VectorXd::Constant(rows_, fit.bias);
      const auto k = kcache_->kernel_matrix();
      for (const int s : sv) f += fit.beta[s] * k.col(s);
      model_ = std::make_unique<SvrModel>(kcache_->kernel(), kcache_->gamma(),
                                          std::move(sx), std::move(sb),
                                          fit.bias);
      predictions_.assign(f.data(), f.data() + rows_);
    } else {
      model_ = train_forest(hyper_->rf, encoded_.topRows(rows_), y,
                            train_seed_);
      predictions_.resize(rows_);
      for (int r = 0; r < rows_; ++r) {
        predictions_[r] = model_->predict(encoded_.row(r).transpose());
      }
    }
    fitted_rows_ = rows_;
  }
  threshold_ = set_threshold(predictions_, lambda_);
}

double SurrogateState::predict(const Genotype& g) const {
  if (!model_) throw ConfigError("surrogate model used before fitting");
  return model_->predict(one_hot_encode(g, spec_.alphabet_size));
}

bool SurrogateState::predictions_flat() const {
  if (predictions_.empty()) return false;
  const auto [lo, hi] =
      std::minmax_element(predictions_.begin(), predictions_.end());
  return *lo == *hi;
}

void SurrogateState::end_iteration(bool elitist_improved) {
  if (!elitist_improved) lambda_ *= eta_;
  refit_and_rethreshold();
}

void SurrogateState::install(std::unique_ptr<Model> model,
                             std::vector<double> predictions) {
  model_ = std::move(model);
  predictions_ = std::move(predictions);
  fitted_rows_ = rows_;
  threshold_ = set_threshold(predictions_, lambda_);
}

void sa_evaluate(Solution& x, SurrogateState& sa, EvaluationLedger& ledger,
                 const FitnessFn& fitness) {
  x.surrogate_fitness = sa.predict(x.genotype);
  const std::string key = ledger.key_for(x.genotype);
  const bool cached = ledger.cached_fitness(key).has_value();
  if (!cached && !(*x.surrogate_fitness > sa.threshold()) && !sa.force_eval())
    return;
  const std::optional<double> before = ledger.elitist_fitness();
  const double value = evaluate_real(x, ledger, fitness);
  if (!cached) {
    sa.add_evaluated(x.genotype, value, key);
    sa.set_force_eval(false);
  }
  const std::optional<double> after = ledger.elitist_fitness();
  if (after && (!before || *after > *before)) sa.on_elitist_improved();
}

void p3_iteration(Pyramid& pyramid, SurrogateState* sa,
                  EvaluationLedger& ledger, const FitnessFn& fitness,
                  Rng& rng) {
  const std::optional<double> elitist_before = ledger.elitist_fitness();

  Solution p;
  p.genotype = random_genotype(pyramid.spec, rng);
  if (sa) {
    sa_evaluate(p, *sa, ledger, fitness);
  } else {
    evaluate_real(p, ledger, fitness);
  }
  pyramid.add(0, p);

  const size_t top_before = pyramid.levels.size() - 1;
  bool promoted = true;
  for (size_t level = 0; level <= top_before && promoted; ++level) {
    PyramidLevel& lv = pyramid.levels[level];
    const Fos fos = build_filtered_linkage_tree(lv.counts.nmi_matrix(), rng);
    const EvalFn ev =
        sa ? EvalFn([&](Solution& s) { sa_evaluate(s, *sa, ledger, fitness); })
           : EvalFn([&](Solution& s) { evaluate_real(s, ledger, fitness); });
    Solution o = gom_improve(p, lv.members, fos, ev, rng);
    promoted = compare_solutions(o, p) == 1;
    if (promoted) pyramid.add(level + 1, o);
    p = std::move(o);
  }

  if (sa) {
    const std::optional<double> after = ledger.elitist_fitness();
    sa->end_iteration(after &&
                      (!elitist_before || *after > *elitist_before));
  }
}

namespace {

// alphabet^num_vars, or 0 once that overflows the guard range; an upper bound
// on distinct cache keys under any keying, exact for raw-keyed problems
unsigned long long capped_space_size(const ProblemSpec& spec) {
  const auto alpha = static_cast<unsigned long long>(spec.alphabet_size);
  unsigned long long size = 1;
  for (int i = 0; i < spec.num_vars; ++i) {
    if (size > (1ULL << 62) / alpha) return 0;
    size *= alpha;
  }
  return size;
}

// Iterations without a budget-charged evaluation before the gate is bypassed
// for one candidate (surrogate mode), and before the run is declared stuck
// (both modes). A flat prediction archive pins the threshold at the model's
// own constant output, which the strict gate can never clear; a cache holding
// every reachable key makes all remaining evaluations free.
constexpr long kForceEvalPatience = 2000;
constexpr long kExhaustedPatience = 10000;

}  // namespace

RunResult run_p3(const ProblemSpec& spec, const FitnessFn& fitness,
                 const P3Options& options, uint64_t seed,
                 const RunCallbacks& callbacks) {
  spec.validate();
  if (options.surrogate && options.budget < spec.num_vars) {
    throw ConfigError(
        "surrogate mode needs a budget of at least the number of variables");
  }
  EvaluationLedger ledger(spec, options.budget, options.time_limit_s);
  TrajectoryBuilder traj(ledger, seed, callbacks.on_elitist_improved);
  Rng rng(seed);
  Pyramid pyramid(spec);
  std::unique_ptr<SurrogateState> sa;

  RunResult result;
  std::string reason = "budget_exhausted";
  try {
    if (options.surrogate) {
      // min-max scale targets for every problem: an archive whose raw spread
      // fits inside the 2*epsilon SVR tube yields a constant predictor, and a
      // constant predictor can never strictly beat its own threshold, which
      // would close the evaluation gate for good
      sa = std::make_unique<SurrogateState>(spec, options.surrogate_kind,
                                            options.eta, seed, true);
      std::unordered_set<std::string> seen;
      std::vector<Solution> init;
      const long cap = 100L * spec.num_vars;
      long attempts = 0;
      while (static_cast<long>(init.size()) < spec.num_vars) {
        Solution s;
        s.genotype = random_genotype(spec, rng);
        ++attempts;
        if (seen.insert(ledger.key_for(s.genotype)).second ||
            attempts >= cap) {
          init.push_back(std::move(s));
        }
      }
      for (Solution& s : init) {
        const std::string key = ledger.key_for(s.genotype);
        const double value = evaluate_real(s, ledger, fitness);
        sa->add_evaluated(s.genotype, value, key);
      }
      sa->tune_once(seed);
      sa->refit_and_rethreshold();
    }
    const unsigned long long space = capped_space_size(spec);
    long idle_iterations = 0;
    while (true) {
      if (ledger.budget_exhausted()) break;
      if (ledger.time_limit_exceeded()) {
        reason = "time_limit";
        break;
      }
      if ((space != 0 &&
           static_cast<unsigned long long>(ledger.distinct_evals()) >= space) ||
          idle_iterations >= kExhaustedPatience) {
        reason = "search_space_exhausted";
        break;
      }
      if (sa) {
        sa->set_force_eval(idle_iterations >= kForceEvalPatience ||
                           sa->predictions_flat());
      }
      const long charged_before = ledger.real_eval_count();
      p3_iteration(pyramid, sa.get(), ledger, fitness, rng);
      ++result.iterations;
      idle_iterations = ledger.real_eval_count() == charged_before
                            ? idle_iterations + 1
                            : 0;
    }
  } catch (const BudgetExhausted&) {
    reason = "budget_exhausted";
  } catch (const TimeLimitExceeded&) {
    reason = "time_limit";
  }

  result.trajectory = traj.finish();
  result.termination_reason = reason;
  result.real_evals = ledger.real_eval_count();
  if (ledger.elitist()) {
    result.final_fitness = ledger.elitist()->fitness;
    result.final_genotype = ledger.key_for(ledger.elitist()->genotype);
  }
  if (sa) result.tuned = sa->hyperparams();
  if (callbacks.on_termination) callbacks.on_termination(reason);
  return result;
}

}  // namespace catopt
