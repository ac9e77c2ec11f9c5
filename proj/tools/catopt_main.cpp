#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "catopt/harness.hpp"

namespace {

using catopt::ExperimentConfig;
using nlohmann::json;

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw catopt::ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw catopt::ConfigError("bad config file " + path + ": " + e.what());
  }
  if (j.contains("algorithm")) cfg.algorithm = catopt::parse_algorithm(j["algorithm"].get<std::string>());
  if (j.contains("problem")) cfg.problem = catopt::parse_fitness_kind(j["problem"].get<std::string>());
  if (j.contains("dataset")) cfg.dataset_path = j["dataset"].get<std::string>();
  if (j.contains("num_vars")) cfg.num_vars = j["num_vars"].get<int>();
  if (j.contains("alphabet_size")) cfg.alphabet_size = j["alphabet_size"].get<int>();
  if (j.contains("trap_block")) cfg.trap_block = j["trap_block"].get<int>();
  if (j.contains("budget")) cfg.budget = j["budget"].get<long>();
  if (j.contains("time_limit_s") && !j["time_limit_s"].is_null()) {
    cfg.time_limit_s = j["time_limit_s"].get<double>();
  }
  if (j.contains("surrogate")) cfg.surrogate = catopt::parse_regressor(j["surrogate"].get<std::string>());
  if (j.contains("eta")) cfg.eta = j["eta"].get<double>();
  if (j.contains("runs")) cfg.runs = j["runs"].get<int>();
  if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("validation_size")) cfg.validation_size = j["validation_size"].get<int>();
  if (j.contains("test_size")) cfg.test_size = j["test_size"].get<int>();
  if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
}

std::vector<long> parse_checkpoints(const std::string& text) {
  std::vector<long> cps;
  size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string field = text.substr(pos, comma - pos);
    if (field.empty()) throw catopt::ConfigError("empty checkpoint value");
    cps.push_back(std::stol(field));
    pos = comma + 1;
  }
  if (cps.empty()) throw catopt::ConfigError("no checkpoints given");
  return cps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"categorical black-box optimization toolkit"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run an experiment");
  std::string config_path, algo, problem, dataset, out_dir, surrogate;
  int num_vars = 0, alphabet = 0, trap_block = 0, runs = 0, workers = 0;
  int validation_size = 0, test_size = 0;
  long budget = 0;
  double time_limit = 0.0, eta = 0.0;
  uint64_t base_seed = 0;
  auto* o_config = run->add_option("--config", config_path, "JSON config file; flags override its values");
  auto* o_algo = run->add_option("--algo", algo, "random-search | local-search | p3 | sa-p3");
  auto* o_problem = run->add_option("--problem", problem, "onemax | trap | partition");
  auto* o_dataset = run->add_option("--dataset", dataset, "dataset CSV (partition problems)");
  auto* o_l = run->add_option("--num-vars,-l", num_vars, "genotype length");
  auto* o_a = run->add_option("--alphabet,-a", alphabet, "alphabet size");
  auto* o_trapk = run->add_option("--trap-k", trap_block, "trap block size");
  auto* o_budget = run->add_option("--budget", budget, "real-evaluation budget");
  auto* o_time = run->add_option("--time-limit-s", time_limit, "wall-clock limit per run, seconds");
  auto* o_surr = run->add_option("--surrogate", surrogate, "svr | rf");
  auto* o_eta = run->add_option("--eta", eta, "lambda decay factor");
  auto* o_runs = run->add_option("--runs", runs, "number of runs");
  auto* o_seed = run->add_option("--seed", base_seed, "base seed; run i uses seed+i");
  auto* o_out = run->add_option("--out", out_dir, "output directory");
  auto* o_val = run->add_option("--validation-size", validation_size, "validation rows");
  auto* o_test = run->add_option("--test-size", test_size, "test rows");
  auto* o_workers = run->add_option("--workers", workers, "parallel runs");

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "aggregate trajectory files at checkpoints");
  std::vector<std::string> agg_files;
  std::string checkpoints_text, agg_out;
  agg->add_option("--in", agg_files, "trajectory CSV files")->required()->expected(-1);
  agg->add_option("--checkpoints", checkpoints_text, "comma-separated real-evaluation counts")->required();
  agg->add_option("--out", agg_out, "output CSV (default: stdout)");

  // test-eval
  auto* te = app.add_subcommand("test-eval", "score a run's final genotype on the test split");
  std::string te_trajectory, te_dataset;
  uint64_t te_seed = 0;
  int te_val = 0, te_test = 0;
  te->add_option("--trajectory", te_trajectory, "trajectory CSV written by run")->required();
  te->add_option("--dataset", te_dataset, "dataset CSV used by the run")->required();
  auto* o_te_seed = te->add_option("--split-seed", te_seed, "must match the manifest");
  auto* o_te_val = te->add_option("--validation-size", te_val, "must match the manifest");
  auto* o_te_test = te->add_option("--test-size", te_test, "must match the manifest");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write the bundled synthetic dataset generator's output");
  std::string gen_out = "synthetic.csv";
  int gen_samples = 2000;
  uint64_t gen_seed = 7;
  gen->add_option("--out", gen_out, "output CSV path");
  gen->add_option("--samples", gen_samples, "number of rows");
  gen->add_option("--gen-seed", gen_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig cfg;
      if (o_config->count()) apply_config_file(config_path, cfg);
      if (o_algo->count()) cfg.algorithm = catopt::parse_algorithm(algo);
      if (o_problem->count()) cfg.problem = catopt::parse_fitness_kind(problem);
      if (o_dataset->count()) cfg.dataset_path = dataset;
      if (o_l->count()) cfg.num_vars = num_vars;
      if (o_a->count()) cfg.alphabet_size = alphabet;
      if (o_trapk->count()) cfg.trap_block = trap_block;
      if (o_budget->count()) cfg.budget = budget;
      if (o_time->count()) cfg.time_limit_s = time_limit;
      if (o_surr->count()) cfg.surrogate = catopt::parse_regressor(surrogate);
      if (o_eta->count()) cfg.eta = eta;
      if (o_runs->count()) cfg.runs = runs;
      if (o_seed->count()) cfg.base_seed = base_seed;
      if (o_out->count()) cfg.out_dir = out_dir;
      if (o_val->count()) cfg.validation_size = validation_size;
      if (o_test->count()) cfg.test_size = test_size;
      if (o_workers->count()) cfg.workers = workers;

      const catopt::ExperimentResult result = catopt::run_experiment(cfg);
      bool failed = false;
      for (const auto& s : result.runs) {
        if (!s.error.empty()) {
          std::printf("run %d seed %llu: error: %s\n", s.run_id,
                      static_cast<unsigned long long>(s.seed), s.error.c_str());
          failed = true;
          continue;
        }
        std::printf("run %d seed %llu: fitness %.17g evals %ld (%s) -> %s\n",
                    s.run_id, static_cast<unsigned long long>(s.seed),
                    s.final_fitness ? *s.final_fitness : 0.0, s.real_evals,
                    s.termination_reason.c_str(), s.trajectory_file.c_str());
      }
      std::printf("manifest: %s\n", result.manifest_path.c_str());
      return failed ? 1 : 0;
    }
    if (agg->parsed()) {
      const auto rows = catopt::aggregate_trajectories(
          agg_files, parse_checkpoints(checkpoints_text));
      if (agg_out.empty()) {
        catopt::write_aggregate_csv(std::cout, rows);
      } else {
        std::ofstream out(agg_out);
        if (!out) throw catopt::Error("cannot write " + agg_out);
        catopt::write_aggregate_csv(out, rows);
        std::printf("wrote %s\n", agg_out.c_str());
      }
      return 0;
    }
    if (te->parsed()) {
      std::optional<uint64_t> seed_override;
      std::optional<int> val_override, test_override;
      if (o_te_seed->count()) seed_override = te_seed;
      if (o_te_val->count()) val_override = te_val;
      if (o_te_test->count()) test_override = te_test;
      const double acc = catopt::evaluate_on_test(
          te_trajectory, te_dataset, seed_override, val_override, test_override);
      std::printf("test_accuracy %.17g\n", acc);
      return 0;
    }
    if (gen->parsed()) {
      catopt::write_dataset_csv(gen_out,
                                catopt::make_synthetic_dataset(gen_samples, gen_seed));
      std::printf("wrote %s\n", gen_out.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
