// End-to-end acceptance checks. Each check prints one [PASS]/[FAIL] line with
// its wall time; the exit status is the number of failed checks. Thresholds
// and tolerances are pinned here on purpose.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "catopt/baselines.hpp"
#include "catopt/gom.hpp"
#include "catopt/harness.hpp"
#include "catopt/linkage.hpp"
#include "catopt/problems.hpp"
#include "catopt/pyramid.hpp"
#include "catopt/surrogate.hpp"

using namespace catopt;
namespace fs = std::filesystem;

namespace {

std::string g_detail;

void detail(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  g_detail = buf;
}

double median20(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return (v[9] + v[10]) / 2.0;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch_dir() {
  static const fs::path base =
      fs::temp_directory_path() /
      ("catopt_acceptance_" + std::to_string(static_cast<long>(::getpid())));
  return base;
}

// ---- 1: GOM never worsens real fitness (trap-5, l=20, 1000 random cases)

bool check_gom_monotonic() {
  ProblemSpec spec;
  spec.num_vars = 20;
  spec.alphabet_size = 2;
  spec.kind = FitnessKind::trap;
  spec.trap_block = 5;
  const FitnessFn fitness = [](const Genotype& g) { return trap_fitness(g, 5); };
  for (int c = 0; c < 1000; ++c) {
    Rng rng(static_cast<uint64_t>(c) + 1);
    EvaluationLedger ledger(spec, 1000000);
    const EvalFn ev = [&](Solution& s) { evaluate_real(s, ledger, fitness); };
    Solution parent;
    parent.genotype = random_genotype(spec, rng);
    evaluate_real(parent, ledger, fitness);
    std::vector<Solution> pool(2 + rng.next_index(6));
    for (Solution& s : pool) {
      s.genotype = random_genotype(spec, rng);
      evaluate_real(s, ledger, fitness);
    }
    Fos fos;
    const size_t subsets = 1 + rng.next_index(10);
    for (size_t i = 0; i < subsets; ++i) {
      const std::vector<size_t> perm =
          rng.permutation(static_cast<size_t>(spec.num_vars));
      std::vector<int> vars(perm.begin(),
                            perm.begin() + 1 + rng.next_index(spec.num_vars));
      fos.subsets.push_back(std::move(vars));
    }
    const Solution out = gom_improve(parent, pool, fos, ev, rng);
    if (trap_fitness(out.genotype, 5) < trap_fitness(parent.genotype, 5)) {
      detail("case %d worsened", c);
      return false;
    }
  }
  detail("1000 cases, no worsening");
  return true;
}

// ---- 2: label-permuted partition genotypes share one cache entry
//         (10,000 pairs, l=50, alpha=10)

bool check_partition_key_invariance() {
  ProblemSpec spec;
  spec.num_vars = 50;
  spec.alphabet_size = 10;
  spec.kind = FitnessKind::partition_ensemble;
  const FitnessFn fitness = [](const Genotype& g) {
    double s = 0.0;
    for (const int v : g) s += v;
    return s;
  };
  Rng rng(7);
  for (int c = 0; c < 10000; ++c) {
    const Genotype g = random_genotype(spec, rng);
    std::vector<int> relabel(spec.alphabet_size);
    for (int v = 0; v < spec.alphabet_size; ++v) relabel[v] = v;
    rng.shuffle(relabel);
    Genotype h(g.size());
    for (size_t i = 0; i < g.size(); ++i) h[i] = relabel[g[i]];
    if (normalize_partition(g) != normalize_partition(h)) {
      detail("pair %d normalized differently", c);
      return false;
    }
    EvaluationLedger ledger(spec, 10);
    Solution a, b;
    a.genotype = g;
    b.genotype = h;
    evaluate_real(a, ledger, fitness);
    evaluate_real(b, ledger, fitness);
    if (ledger.real_eval_count() != 1) {
      detail("pair %d cost %ld evaluations", c, ledger.real_eval_count());
      return false;
    }
  }
  detail("10000 pairs, one evaluation each");
  return true;
}

// ---- 3: gate controller reproduces the lambda sequence and the quantile rule

class FixedModel : public Model {
 public:
  FixedModel(double value, int dim) : value_(value), dim_(dim) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return value_;
  }
  int dimension() const override { return dim_; }

 private:
  double value_;
  int dim_;
};

bool check_gate_controller() {
  if (set_threshold({0.1, 0.2, 0.3, 0.4}, 1.0) != 0.4) {
    detail("quantile rule broken at lambda=1");
    return false;
  }
  ProblemSpec spec;
  spec.num_vars = 2;
  spec.alphabet_size = 2;
  SurrogateState sa(spec, RegressorKind::svr, 0.999, 1, true);
  const std::vector<Genotype> archive = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (size_t i = 0; i < archive.size(); ++i) {
    sa.add_evaluated(archive[i], 0.1 * static_cast<double>(i + 1),
                     genotype_key(archive[i]));
  }
  sa.install(std::make_unique<FixedModel>(0.25, 4), {0.1, 0.2, 0.3, 0.4});
  if (sa.lambda() != 1.0) {
    detail("fresh lambda is %.17g", sa.lambda());
    return false;
  }
  sa.end_iteration(false);
  if (sa.lambda() != 0.999) {
    detail("one stagnant iteration gives %.17g", sa.lambda());
    return false;
  }
  sa.end_iteration(false);
  if (sa.lambda() != 0.999 * 0.999 ||
      std::abs(sa.lambda() - 0.998001) > 1e-12) {
    detail("two stagnant iterations give %.17g", sa.lambda());
    return false;
  }
  sa.on_elitist_improved();
  if (sa.lambda() != 1.0) {
    detail("improvement left lambda at %.17g", sa.lambda());
    return false;
  }
  detail("1 -> 0.999 -> 0.998001 -> 1; threshold quantile exact");
  return true;
}

// ---- 4: linkage tree has 2l-1 nodes; duplicated columns pair up and lose
//         their singletons after filtering

bool check_linkage_tree_shape() {
  for (int l = 3; l <= 16; ++l) {
    ProblemSpec spec;
    spec.num_vars = l;
    spec.alphabet_size = 3;
    Rng rng(static_cast<uint64_t>(l));
    std::vector<Genotype> pop(20);
    for (Genotype& g : pop) g = random_genotype(spec, rng);
    const std::vector<LinkageTreeNode> nodes =
        build_linkage_tree(estimate_nmi_matrix(pop, 3), rng);
    if (nodes.size() != static_cast<size_t>(2 * l - 1)) {
      detail("l=%d built %zu nodes", l, nodes.size());
      return false;
    }
  }
  ProblemSpec spec;
  spec.num_vars = 6;
  spec.alphabet_size = 2;
  Rng rng(11);
  std::vector<Genotype> pop(30);
  for (Genotype& g : pop) {
    g = random_genotype(spec, rng);
    g[4] = g[1];
  }
  const Fos fos = build_filtered_linkage_tree(estimate_nmi_matrix(pop, 2), rng);
  bool pair = false, singleton = false;
  for (const std::vector<int>& s : fos.subsets) {
    if (s == std::vector<int>{1, 4}) pair = true;
    if (s == std::vector<int>{1} || s == std::vector<int>{4}) singleton = true;
  }
  if (!pair || singleton) {
    detail("duplicated columns: pair %d singleton %d", pair, singleton);
    return false;
  }
  detail("2l-1 nodes for l=3..16; duplicate columns fuse");
  return true;
}

// ---- 5: NMI matches a brute-force contingency-table oracle

double oracle_nmi(const std::vector<Genotype>& pop, int alpha, int i, int j) {
  if (i == j) return 1.0;
  const double n = static_cast<double>(pop.size());
  std::vector<double> joint(static_cast<size_t>(alpha) * alpha, 0.0);
  std::vector<double> pi(alpha, 0.0), pj(alpha, 0.0);
  for (const Genotype& g : pop) {
    joint[static_cast<size_t>(g[i]) * alpha + g[j]] += 1.0;
    pi[g[i]] += 1.0;
    pj[g[j]] += 1.0;
  }
  double info = 0.0, joint_entropy = 0.0;
  for (int a = 0; a < alpha; ++a) {
    for (int b = 0; b < alpha; ++b) {
      const double p = joint[static_cast<size_t>(a) * alpha + b] / n;
      if (p <= 0.0) continue;
      joint_entropy -= p * std::log(p);
      info += p * std::log(p / (pi[a] / n * (pj[b] / n)));
    }
  }
  if (joint_entropy == 0.0) return 0.0;
  return info / joint_entropy;
}

bool check_nmi_oracle() {
  Rng rng(3);
  for (int c = 0; c < 100; ++c) {
    ProblemSpec spec;
    spec.num_vars = 2 + static_cast<int>(rng.next_index(5));
    spec.alphabet_size = 2 + static_cast<int>(rng.next_index(3));
    const size_t n = 2 + rng.next_index(29);
    std::vector<Genotype> pop(n);
    for (Genotype& g : pop) g = random_genotype(spec, rng);
    const NmiMatrix m = estimate_nmi_matrix(pop, spec.alphabet_size);
    for (int i = 0; i < spec.num_vars; ++i) {
      for (int j = 0; j < spec.num_vars; ++j) {
        if (m(i, j) != m(j, i) || m(i, j) < 0.0 || m(i, j) > 1.0) {
          detail("case %d entry (%d,%d) malformed", c, i, j);
          return false;
        }
        const double want = oracle_nmi(pop, spec.alphabet_size, i, j);
        if (std::abs(m(i, j) - want) > 1e-9) {
          detail("case %d entry (%d,%d): %.12f vs oracle %.12f", c, i, j,
                 m(i, j), want);
          return false;
        }
      }
    }
  }
  detail("100 populations within 1e-9");
  return true;
}

// ---- 6: plain P3 recovers the trap optimum

bool check_trap_recovery() {
  ProblemSpec spec;
  spec.num_vars = 25;
  spec.alphabet_size = 2;
  spec.kind = FitnessKind::trap;
  spec.trap_block = 5;
  const FitnessFn fitness = [](const Genotype& g) { return trap_fitness(g, 5); };
  P3Options opt;
  opt.budget = 30000;
  int solved = 0;
  for (uint64_t s = 1; s <= 20; ++s) {
    if (run_p3(spec, fitness, opt, s).final_fitness.value() == 25.0) ++solved;
  }
  detail("%d/20 seeds reached 25 (need >= 18)", solved);
  return solved >= 18;
}

// ---- 7: surrogate-assisted median vs plain median at an equal real budget

bool check_surrogate_trap_comparison() {
  ProblemSpec spec;
  spec.num_vars = 25;
  spec.alphabet_size = 2;
  spec.kind = FitnessKind::trap;
  spec.trap_block = 5;
  const FitnessFn fitness = [](const Genotype& g) { return trap_fitness(g, 5); };
  P3Options plain;
  plain.budget = 1000;
  P3Options assisted = plain;
  assisted.surrogate = true;
  assisted.surrogate_kind = RegressorKind::svr;
  assisted.eta = 0.999;
  std::vector<double> plain_finals, sa_finals;
  for (uint64_t s = 1; s <= 20; ++s) {
    plain_finals.push_back(run_p3(spec, fitness, plain, s).final_fitness.value());
    sa_finals.push_back(run_p3(spec, fitness, assisted, s).final_fitness.value());
  }
  const double pm = median20(plain_finals), sm = median20(sa_finals);
  detail("surrogate median %.1f vs plain median %.1f", sm, pm);
  return sm >= pm;
}

// ---- 8: the all-zeros partition equals an independently computed
//         single-learner baseline, bit for bit

bool check_ensemble_baseline_equality() {
  SplitSpec split;
  split.train_size = 100;
  split.validation_size = 500;
  split.test_size = 500;
  split.seed = 1;
  const DataSplits s =
      load_and_split(std::string(CATOPT_DATA_DIR) + "/synthetic.csv", split);
  const LogisticLearner learner;
  const double through_partition = partition_fitness(
      Genotype(100, 0), s.train, s.validation, 5, learner);

  const auto fitted =
      learner.fit(s.train.features, s.train.labels, s.num_classes);
  const Eigen::MatrixXd proba = fitted->predict_proba(s.validation.features);
  long hits = 0;
  for (Eigen::Index r = 0; r < proba.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < proba.cols(); ++c) {
      if (proba(r, c) > proba(r, best)) best = c;
    }
    if (best == s.validation.labels[r]) ++hits;
  }
  const double baseline =
      static_cast<double>(hits) / static_cast<double>(proba.rows());
  detail("partition %.17g vs baseline %.17g", through_partition, baseline);
  return through_partition == baseline;
}

// ---- 9: every completed local-search restart hits the onemax optimum within
//         1 + 2*l*(alpha-1) real evaluations

bool check_local_search_bound() {
  ProblemSpec spec;
  spec.num_vars = 50;
  spec.alphabet_size = 5;
  spec.kind = FitnessKind::categorical_onemax;
  const FitnessFn fitness = [](const Genotype& g) {
    return categorical_onemax_fitness(g);
  };
  const long bound = 1 + 2L * 50 * 4;
  long restarts = 0;
  for (uint64_t s = 1; s <= 50; ++s) {
    const BaselineResult r = local_search(spec, fitness, 2000, std::nullopt, s);
    if (r.restarts.empty()) {
      detail("seed %llu completed no restart", static_cast<unsigned long long>(s));
      return false;
    }
    for (const RestartStats& st : r.restarts) {
      ++restarts;
      if (st.best_fitness != 50.0 || st.end_evals - st.start_evals > bound) {
        detail("seed %llu: fitness %.0f in %ld evaluations (bound %ld)",
               static_cast<unsigned long long>(s), st.best_fitness,
               st.end_evals - st.start_evals, bound);
        return false;
      }
    }
  }
  detail("%ld restarts, all optimal within %ld evaluations", restarts, bound);
  return true;
}

// ---- 10: SVR ranks a noiseless linear target; grids have the pinned size

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

bool check_svr_rank_quality() {
  // rank-statistics oracle pins for the helper itself
  if (std::abs(spearman({1.0, 2.0, 2.0, 3.0, 5.0, 5.0, 5.0, 8.0},
                        {1.5, 1.5, 3.0, 4.0, 6.0, 5.0, 8.0, 7.0}) -
               0.9076841403834682) > 1e-12 ||
      std::abs(spearman({1, 2, 3, 4, 5}, {3, 1, 4, 2, 5}) - 0.5) > 1e-12) {
    detail("rank helper disagrees with its oracle pins");
    return false;
  }

  const int l = 12, alpha = 3, train_n = 200, test_n = 100;
  Rng rng(5);
  std::vector<double> w(static_cast<size_t>(l) * alpha);
  for (double& x : w) x = rng.uniform01();
  ProblemSpec spec;
  spec.num_vars = l;
  spec.alphabet_size = alpha;
  std::vector<Genotype> gs(train_n + test_n);
  for (Genotype& g : gs) g = random_genotype(spec, rng);
  const Eigen::MatrixXd x = one_hot_encode_all(gs, alpha);
  Eigen::VectorXd y(train_n + test_n);
  for (int i = 0; i < train_n + test_n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < l * alpha; ++j) acc += w[j] * x(i, j);
    y[i] = acc;
  }
  const double lo = y.head(train_n).minCoeff();
  const double hi = y.head(train_n).maxCoeff();
  const Eigen::VectorXd ys = (y.array() - lo) / (hi - lo);

  const TuneResult svr = tune_hyperparameters(RegressorKind::svr,
                                              x.topRows(train_n),
                                              ys.head(train_n), 5);
  const TuneResult rf = tune_hyperparameters(RegressorKind::random_forest,
                                             x.topRows(60), ys.head(60), 5);
  if (svr.candidates_evaluated != 2 || rf.candidates_evaluated != 18) {
    detail("grid sizes %d and %d", svr.candidates_evaluated,
           rf.candidates_evaluated);
    return false;
  }
  const auto model =
      train_regressor(svr.best, x.topRows(train_n), ys.head(train_n), 5);
  std::vector<double> pred(test_n), truth(test_n);
  for (int i = 0; i < test_n; ++i) {
    pred[i] = model->predict(x.row(train_n + i).transpose());
    truth[i] = y[train_n + i];
  }
  const double rho = spearman(pred, truth);
  detail("held-out spearman %.4f (need >= 0.9); grids 2 and 18", rho);
  return rho >= 0.9;
}

// ---- 11: identical config and seed give byte-identical trajectory files,
//          both through the library and through the installed binary

bool check_rerun_determinism() {
  const fs::path base = scratch_dir();
  fs::remove_all(base);
  fs::create_directories(base);

  ExperimentConfig config;
  config.algorithm = Algorithm::sa_p3;
  config.problem = FitnessKind::trap;
  config.num_vars = 10;
  config.alphabet_size = 2;
  config.trap_block = 5;
  config.budget = 150;
  config.runs = 2;
  config.base_seed = 9;
  config.out_dir = (base / "lib_a").string();
  const ExperimentResult first = run_experiment(config);
  config.out_dir = (base / "lib_b").string();
  const ExperimentResult second = run_experiment(config);
  for (int r = 0; r < config.runs; ++r) {
    const std::string name = first.runs[r].trajectory_file;
    if (read_file(base / "lib_a" / name) != read_file(base / "lib_b" / name)) {
      detail("library rerun diverged in %s", name.c_str());
      return false;
    }
  }

  const std::string cli = CATOPT_CLI_PATH;
  const std::string invocation =
      " run --algo sa-p3 --problem partition --dataset " +
      std::string(CATOPT_DATA_DIR) + "/synthetic.csv" +
      " --num-vars 40 --alphabet 3 --budget 60 --runs 1 --seed 4 --out ";
  for (const char* dir : {"cli_a", "cli_b"}) {
    const std::string cmd = cli + invocation + (base / dir).string() +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      detail("binary invocation failed");
      return false;
    }
  }
  if (read_file(base / "cli_a" / "trajectory_0.csv") !=
          read_file(base / "cli_b" / "trajectory_0.csv") ||
      read_file(base / "cli_a" / "trajectory_0.csv").empty()) {
    detail("binary rerun diverged");
    return false;
  }
  detail("library and binary reruns byte-identical");
  return true;
}

// ---- 12: the bundled dataset end to end: the optimizer's final validation
//          accuracy beats the single-learner baseline in most seeds

bool check_ensemble_end_to_end() {
  const std::string dataset = std::string(CATOPT_DATA_DIR) + "/synthetic.csv";
  SplitSpec split;
  split.train_size = 100;
  split.validation_size = 500;
  split.test_size = 500;
  split.seed = 1;
  const DataSplits s = load_and_split(dataset, split);
  const LogisticLearner learner;
  const double baseline =
      partition_fitness(Genotype(100, 0), s.train, s.validation, 5, learner);

  ExperimentConfig config;
  config.algorithm = Algorithm::sa_p3;
  config.problem = FitnessKind::partition_ensemble;
  config.dataset_path = dataset;
  config.num_vars = 100;
  config.alphabet_size = 5;
  config.budget = 1000;
  config.runs = 20;
  config.base_seed = 1;
  config.out_dir = (scratch_dir() / "end_to_end").string();
  const ExperimentResult result = run_experiment(config);
  int beat = 0;
  for (const RunSummary& r : result.runs) {
    if (r.error.empty() && r.final_fitness && *r.final_fitness >= baseline)
      ++beat;
  }
  detail("%d/20 seeds >= baseline %.3f (need >= 15)", beat, baseline);
  return beat >= 15;
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    bool (*fn)();
    double time_limit_s;
  };
  const std::vector<Check> checks = {
      {"gom monotonicity", check_gom_monotonic, 10.0},
      {"partition key invariance", check_partition_key_invariance, 10.0},
      {"gate controller", check_gate_controller, 1.0},
      {"linkage tree shape", check_linkage_tree_shape, 5.0},
      {"nmi oracle equivalence", check_nmi_oracle, 5.0},
      {"trap optimum recovery", check_trap_recovery, 120.0},
      {"surrogate trap comparison", check_surrogate_trap_comparison, 900.0},
      {"ensemble baseline equality", check_ensemble_baseline_equality, 5.0},
      {"local search bound", check_local_search_bound, 5.0},
      {"svr rank quality", check_svr_rank_quality, 30.0},
      {"rerun determinism", check_rerun_determinism, 1800.0},
      {"ensemble end to end", check_ensemble_end_to_end, 1800.0},
  };
  int failures = 0;
  for (size_t i = 0; i < checks.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    g_detail.clear();
    bool ok = false;
    try {
      ok = checks[i].fn();
    } catch (const std::exception& e) {
      detail("threw: %s", e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (elapsed > checks[i].time_limit_s) {
      ok = false;
      g_detail += " [over time limit]";
    }
    if (!ok) ++failures;
    std::printf("[%s] %02zu %s: %s (%.1fs)\n", ok ? "PASS" : "FAIL", i + 1,
                checks[i].name, g_detail.c_str(), elapsed);
    std::fflush(stdout);
  }
  fs::remove_all(scratch_dir());
  if (failures) std::printf("%d of %zu checks failed\n", failures, checks.size());
  return failures;
}
