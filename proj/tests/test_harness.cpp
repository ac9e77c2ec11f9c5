#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "catopt/harness.hpp"

using namespace catopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("catopt_harness_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_traj(const fs::path& p, const std::vector<TrajectoryRecord>& recs) {
  write_trajectory_csv(p.string(), recs);
}

TrajectoryRecord rec(int run, long evals, double fitness,
                     const std::string& g) {
  TrajectoryRecord r;
  r.run_id = run;
  r.seed = 100 + run;
  r.real_evals = evals;
  r.elitist_fitness = fitness;
  r.elitist_genotype = g;
  return r;
}

}  // namespace

TEST_CASE("name parsing round-trips and accepts aliases") {
  CHECK(parse_algorithm("p3") == Algorithm::p3);
  CHECK(parse_algorithm("sa-p3") == Algorithm::sa_p3);
  CHECK(parse_algorithm("random-search") == Algorithm::random_search);
  CHECK(parse_algorithm("rs") == Algorithm::random_search);
  CHECK(parse_algorithm("local-search") == Algorithm::local_search);
  CHECK(parse_algorithm("ls") == Algorithm::local_search);
  CHECK_THROWS_AS(parse_algorithm("annealing"), ConfigError);
  for (const Algorithm a : {Algorithm::random_search, Algorithm::local_search,
                            Algorithm::p3, Algorithm::sa_p3}) {
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  }

  CHECK(parse_fitness_kind("onemax") == FitnessKind::categorical_onemax);
  CHECK(parse_fitness_kind("trap") == FitnessKind::trap);
  CHECK(parse_fitness_kind("partition") == FitnessKind::partition_ensemble);
  CHECK_THROWS_AS(parse_fitness_kind("nk"), ConfigError);

  CHECK(parse_regressor("svr") == RegressorKind::svr);
  CHECK(parse_regressor("rf") == RegressorKind::random_forest);
  CHECK(parse_regressor("random-forest") == RegressorKind::random_forest);
  CHECK_THROWS_AS(parse_regressor("gp"), ConfigError);
}

TEST_CASE("config validation rejects bad experiments") {
  ExperimentConfig config;
  config.out_dir = "x";
  CHECK_NOTHROW(validate_config(config));

  ExperimentConfig bad = config;
  bad.runs = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.budget = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.workers = 0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.eta = 0.0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.time_limit_s = -1.0;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.out_dir = "";
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.problem = FitnessKind::partition_ensemble;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);  // no dataset
  bad = config;
  bad.algorithm = Algorithm::sa_p3;
  bad.budget = bad.num_vars - 1;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  bad = config;
  bad.problem = FitnessKind::trap;
  bad.alphabet_size = 3;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
}

TEST_CASE("trajectory csv round-trips with quoted genotypes") {
  TempDir tmp;
  std::vector<TrajectoryRecord> recs;
  recs.push_back(rec(0, 1, 0.125, "1,0,2"));
  recs.push_back(rec(0, 9, 3.0, "0,0,0"));
  recs[1].elapsed_ms = 42;
  const fs::path p = tmp.path / "t.csv";
  write_traj(p, recs);

  const std::string text = slurp(p);
  CHECK(text.find("run_id,seed,real_evals,elapsed_ms,elitist_fitness,"
                  "elitist_genotype\n") == 0);
  CHECK(text.find("\"1,0,2\"") != std::string::npos);

  const auto back = read_trajectory_csv(p.string());
  REQUIRE(back.size() == 2);
  CHECK(back[0].run_id == 0);
  CHECK(back[0].seed == 100);
  CHECK(back[0].real_evals == 1);
  CHECK(back[0].elitist_fitness == 0.125);
  CHECK(back[0].elitist_genotype == "1,0,2");
  CHECK(back[1].elapsed_ms == 42);
  CHECK(back[1].elitist_genotype == "0,0,0");
}

TEST_CASE("aggregation carries the last fitness at or before each checkpoint") {
  TempDir tmp;
  write_traj(tmp.path / "a.csv",
             {rec(0, 1, 1.0, "0"), rec(0, 5, 3.0, "0"), rec(0, 100, 7.0, "0")});
  write_traj(tmp.path / "b.csv", {rec(1, 2, 2.0, "0"), rec(1, 50, 9.0, "0")});

  const auto rows = aggregate_trajectories(
      {(tmp.path / "a.csv").string(), (tmp.path / "b.csv").string()},
      {1, 10, 100});
  REQUIRE(rows.size() == 3);

  CHECK(rows[0].checkpoint == 1);
  CHECK(rows[0].mean == 1.5);  // run b has no record yet: first record carries
  CHECK(rows[0].min == 1.0);
  CHECK(rows[0].max == 2.0);
  CHECK(rows[0].runs == 2);

  CHECK(rows[1].checkpoint == 10);
  CHECK(rows[1].mean == 2.5);
  CHECK(rows[1].min == 2.0);
  CHECK(rows[1].max == 3.0);

  CHECK(rows[2].checkpoint == 100);
  CHECK(rows[2].mean == 8.0);
  CHECK(rows[2].min == 7.0);
  CHECK(rows[2].max == 9.0);

  std::ostringstream out;
  write_aggregate_csv(out, rows);
  CHECK(out.str().find("checkpoint,mean,min,max,runs\n") == 0);
  CHECK(out.str().find("1,1.5,1,2,2\n") != std::string::npos);
}

TEST_CASE("aggregation rejects bad inputs") {
  TempDir tmp;
  write_traj(tmp.path / "a.csv", {rec(0, 1, 1.0, "0")});
  const std::string a = (tmp.path / "a.csv").string();

  CHECK_THROWS_AS(aggregate_trajectories({}, {1}), EmptyInput);
  CHECK_THROWS_AS(aggregate_trajectories({a}, {5, 5}), ConfigError);
  CHECK_THROWS_AS(aggregate_trajectories({a}, {10, 2}), ConfigError);
  CHECK_THROWS_AS(aggregate_trajectories({a}, {}), ConfigError);

  write_traj(tmp.path / "empty.csv", {});
  CHECK_THROWS_AS(
      aggregate_trajectories({(tmp.path / "empty.csv").string()}, {1}),
      EmptyInput);
}

TEST_CASE("experiments write per-run trajectories and a manifest") {
  TempDir tmp;
  ExperimentConfig config;
  config.algorithm = Algorithm::p3;
  config.problem = FitnessKind::categorical_onemax;
  config.num_vars = 10;
  config.alphabet_size = 2;
  config.budget = 300;
  config.runs = 3;
  config.base_seed = 50;
  config.out_dir = (tmp.path / "exp").string();

  const ExperimentResult result = run_experiment(config);
  REQUIRE(result.runs.size() == 3);
  for (int i = 0; i < 3; ++i) {
    const RunSummary& s = result.runs[i];
    CHECK(s.run_id == i);
    CHECK(s.seed == 50 + static_cast<uint64_t>(i));
    CHECK(s.error.empty());
    CHECK(s.termination_reason == "budget_exhausted");
    CHECK(s.real_evals == 300);
    CHECK(s.final_fitness == 10.0);

    const fs::path tf = fs::path(config.out_dir) / s.trajectory_file;
    REQUIRE(fs::exists(tf));
    const auto recs = read_trajectory_csv(tf.string());
    REQUIRE_FALSE(recs.empty());
    CHECK(recs.front().run_id == i);
    CHECK(recs.front().seed == s.seed);
    CHECK(recs.back().elitist_fitness == *s.final_fitness);
    CHECK(recs.back().elitist_genotype == s.final_genotype);
  }

  const fs::path mp = result.manifest_path;
  REQUIRE(fs::exists(mp));
  const nlohmann::json manifest = nlohmann::json::parse(slurp(mp));
  CHECK(manifest["config"]["algorithm"] == "p3");
  CHECK(manifest["config"]["problem"] == "onemax");
  CHECK(manifest["config"]["num_vars"] == 10);
  CHECK(manifest["config"]["budget"] == 300);
  CHECK(manifest["config"]["base_seed"] == 50);
  CHECK(manifest["config"]["time_limit_s"].is_null());
  REQUIRE(manifest["runs"].size() == 3);
  CHECK(manifest["runs"][0]["trajectory_file"] == result.runs[0].trajectory_file);
  CHECK(manifest["runs"][0]["final_fitness"] == 10.0);
  CHECK(manifest["runs"][0]["tuned"].is_null());
}

TEST_CASE("experiment reruns are byte-identical") {
  TempDir tmp;
  ExperimentConfig config;
  config.algorithm = Algorithm::sa_p3;
  config.problem = FitnessKind::trap;
  config.num_vars = 10;
  config.alphabet_size = 2;
  config.trap_block = 5;
  config.budget = 60;
  config.runs = 2;
  config.base_seed = 3;

  config.out_dir = (tmp.path / "first").string();
  const ExperimentResult first = run_experiment(config);
  config.out_dir = (tmp.path / "second").string();
  const ExperimentResult second = run_experiment(config);

  REQUIRE(first.runs.size() == 2);
  for (size_t i = 0; i < first.runs.size(); ++i) {
    CHECK(first.runs[i].error.empty());
    CHECK(slurp(fs::path((tmp.path / "first").string()) /
                first.runs[i].trajectory_file) ==
          slurp(fs::path((tmp.path / "second").string()) /
                second.runs[i].trajectory_file));
  }
  CHECK(slurp(first.manifest_path) == slurp(second.manifest_path));
}

TEST_CASE("worker pools reproduce serial results") {
  TempDir tmp;
  ExperimentConfig config;
  config.algorithm = Algorithm::random_search;
  config.problem = FitnessKind::categorical_onemax;
  config.num_vars = 12;
  config.alphabet_size = 3;
  config.budget = 200;
  config.runs = 4;
  config.base_seed = 9;

  config.workers = 1;
  config.out_dir = (tmp.path / "serial").string();
  run_experiment(config);
  config.workers = 3;
  config.out_dir = (tmp.path / "pool").string();
  const ExperimentResult pooled = run_experiment(config);

  for (const RunSummary& s : pooled.runs) CHECK(s.error.empty());
  for (int i = 0; i < 4; ++i) {
    const std::string name = "trajectory_" + std::to_string(i) + ".csv";
    CHECK(slurp(tmp.path / "serial" / name) == slurp(tmp.path / "pool" / name));
  }
  CHECK(slurp(tmp.path / "serial" / "manifest.json") ==
        slurp(tmp.path / "pool" / "manifest.json"));
}

TEST_CASE("partition experiments round-trip through test evaluation") {
  TempDir tmp;
  const Dataset data = make_synthetic_dataset(400, 12);
  const fs::path dataPath = tmp.path / "demo.csv";
  write_dataset_csv(dataPath.string(), data);

  ExperimentConfig config;
  config.algorithm = Algorithm::sa_p3;
  config.problem = FitnessKind::partition_ensemble;
  config.dataset_path = dataPath.string();
  config.num_vars = 40;
  config.alphabet_size = 3;
  config.budget = 55;
  config.runs = 1;
  config.base_seed = 31;
  config.validation_size = 200;
  config.test_size = 120;
  config.out_dir = (tmp.path / "exp").string();

  const ExperimentResult result = run_experiment(config);
  REQUIRE(result.runs.size() == 1);
  REQUIRE(result.runs[0].error.empty());
  CHECK(result.runs[0].final_fitness.has_value());
  CHECK(*result.runs[0].final_fitness >= 0.0);
  CHECK(*result.runs[0].final_fitness <= 1.0);
  REQUIRE(result.runs[0].tuned.has_value());

  const nlohmann::json manifest =
      nlohmann::json::parse(slurp(result.manifest_path));
  CHECK(manifest["config"]["dataset"] == "demo.csv");
  CHECK_FALSE(manifest["runs"][0]["tuned"].is_null());

  const std::string tf =
      (fs::path(config.out_dir) / result.runs[0].trajectory_file).string();
  const double acc = evaluate_on_test(tf, dataPath.string());
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  CHECK(evaluate_on_test(tf, dataPath.string(), config.base_seed,
                         config.validation_size, config.test_size) == acc);

  CHECK_THROWS_AS(evaluate_on_test(tf, dataPath.string(), config.base_seed + 1,
                                   {}, {}),
                  SplitMismatch);
  CHECK_THROWS_AS(evaluate_on_test(tf, dataPath.string(), {}, 123, {}),
                  SplitMismatch);

  const fs::path renamed = tmp.path / "other.csv";
  fs::copy_file(dataPath, renamed);
  CHECK_THROWS_AS(evaluate_on_test(tf, renamed.string()), SplitMismatch);
}

TEST_CASE("test evaluation refuses non-partition manifests") {
  TempDir tmp;
  ExperimentConfig config;
  config.algorithm = Algorithm::p3;
  config.problem = FitnessKind::categorical_onemax;
  config.num_vars = 8;
  config.budget = 50;
  config.out_dir = (tmp.path / "exp").string();
  const ExperimentResult result = run_experiment(config);

  const Dataset data = make_synthetic_dataset(1200, 1);
  const fs::path dataPath = tmp.path / "d.csv";
  write_dataset_csv(dataPath.string(), data);
  const std::string tf =
      (fs::path(config.out_dir) / result.runs[0].trajectory_file).string();
  CHECK_THROWS_AS(evaluate_on_test(tf, dataPath.string()), ConfigError);
}

TEST_CASE("failed runs are recorded without stopping the experiment") {
  TempDir tmp;
  ExperimentConfig config;
  config.algorithm = Algorithm::sa_p3;
  config.problem = FitnessKind::partition_ensemble;
  config.num_vars = 40;
  config.alphabet_size = 3;
  config.budget = 50;
  config.runs = 1;
  config.dataset_path = (tmp.path / "missing.csv").string();
  config.out_dir = (tmp.path / "exp").string();

  CHECK_THROWS_AS(run_experiment(config), ParseError);
}
