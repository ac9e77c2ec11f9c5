#include "catopt/trajectory.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "catopt/errors.hpp"

namespace catopt {

TrajectoryBuilder::TrajectoryBuilder(EvaluationLedger& ledger, uint64_t seed,
                                     EvaluationLedger::ImproveHook forward)
    : ledger_(&ledger), seed_(seed), forward_(std::move(forward)) {
  ledger.set_improve_hook(
      [this](long evals, double fitness, const std::string& key) {
        TrajectoryRecord rec;
        rec.seed = seed_;
        rec.real_evals = evals;
        rec.elapsed_ms = ledger_->has_time_limit() ? ledger_->elapsed_ms() : 0;
        rec.elitist_fitness = fitness;
        rec.elitist_genotype = key;
        records_.push_back(std::move(rec));
        if (forward_) forward_(evals, fitness, key);
      });
}

std::vector<TrajectoryRecord> TrajectoryBuilder::finish() {
  if (ledger_->elitist()) {
    const Solution& e = *ledger_->elitist();
    TrajectoryRecord rec;
    rec.seed = seed_;
    rec.real_evals = ledger_->real_eval_count();
    rec.elapsed_ms = ledger_->has_time_limit() ? ledger_->elapsed_ms() : 0;
    rec.elitist_fitness = *e.fitness;
    rec.elitist_genotype = ledger_->key_for(e.genotype);
    records_.push_back(std::move(rec));
  }
  ledger_->set_improve_hook(nullptr);
  return std::move(records_);
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trajectory file: " + path);
  out << "run_id,seed,real_evals,elapsed_ms,elitist_fitness,elitist_genotype\n";
  char buf[64];
  for (const auto& rec : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", rec.elitist_fitness);
    out << rec.run_id << ',' << rec.seed << ',' << rec.real_evals << ','
        << rec.elapsed_ms << ',' << buf << ",\"" << rec.elitist_genotype
        << "\"\n";
  }
}

std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trajectory file: " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError("trajectory file is empty: " + path);
  }
  std::vector<TrajectoryRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    TrajectoryRecord rec;
    size_t pos = 0;
    const auto next_field = [&](bool last) {
      size_t comma = line.find(',', pos);
      if (!last && comma == std::string::npos) {
        throw ParseError("row " + std::to_string(line_no) +
                         " has too few columns in " + path);
      }
      if (last) comma = line.size();
      std::string field = line.substr(pos, comma - pos);
      pos = comma + 1;
      return field;
    };
    try {
      rec.run_id = std::stoi(next_field(false));
      rec.seed = std::stoull(next_field(false));
      rec.real_evals = std::stol(next_field(false));
      rec.elapsed_ms = std::stol(next_field(false));
      rec.elitist_fitness = std::stod(next_field(false));
    } catch (const std::exception&) {
      throw ParseError("bad numeric field at row " + std::to_string(line_no) +
                       " in " + path);
    }
    std::string gen = line.substr(pos);
    if (gen.size() >= 2 && gen.front() == '"' && gen.back() == '"') {
      gen = gen.substr(1, gen.size() - 2);
    }
    rec.elitist_genotype = std::move(gen);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace catopt
