#include "catopt/genotype.hpp"

#include <cmath>
#include <cstdio>

namespace catopt {

void ProblemSpec::validate() const {
  if (num_vars < 1) throw ConfigError("num_vars must be >= 1");
  if (alphabet_size < 2) throw ConfigError("alphabet_size must be >= 2");
  if (kind == FitnessKind::trap) {
    if (alphabet_size != 2) throw ConfigError("trap requires a binary alphabet");
    if (trap_block < 1 || num_vars % trap_block != 0) {
      throw ConfigError("num_vars must be a positive multiple of the trap block size");
    }
  }
}

Genotype normalize_partition(const Genotype& g) {
  Genotype out(g.size());
  std::unordered_map<int, int> relabel;
  int next = 0;
  for (size_t i = 0; i < g.size(); ++i) {
    auto [it, inserted] = relabel.try_emplace(g[i], next);
    if (inserted) ++next;
    out[i] = it->second;
  }
  return out;
}

std::string genotype_key(const Genotype& g) {
  std::string key;
  key.reserve(g.size() * 2);
  char buf[16];
  for (size_t i = 0; i < g.size(); ++i) {
    if (i) key.push_back(',');
    std::snprintf(buf, sizeof(buf), "%d", g[i]);
    key += buf;
  }
  return key;
}

Genotype parse_genotype_key(const std::string& key) {
  Genotype g;
  if (key.empty()) return g;
  size_t pos = 0;
  while (true) {
    const size_t comma = key.find(',', pos);
    const size_t end = comma == std::string::npos ? key.size() : comma;
    if (end == pos) throw ParseError("empty gene in genotype key: " + key);
    int value = 0;
    for (size_t i = pos; i < end; ++i) {
      if (key[i] < '0' || key[i] > '9') {
        throw ParseError("bad gene value in genotype key: " + key);
      }
      value = value * 10 + (key[i] - '0');
    }
    g.push_back(value);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return g;
}

Genotype random_genotype(const ProblemSpec& spec, Rng& rng) {
  Genotype g(spec.num_vars);
  for (auto& v : g) v = static_cast<int>(rng.next_index(spec.alphabet_size));
  return g;
}

EvaluationLedger::EvaluationLedger(const ProblemSpec& spec, long budget,
                                   std::optional<double> time_limit_s)
    : spec_(spec),
      budget_(budget),
      time_limit_s_(time_limit_s),
      start_(std::chrono::steady_clock::now()) {
  if (budget_ < 0) throw ConfigError("budget must be >= 0");
}

bool EvaluationLedger::time_limit_exceeded() const {
  if (!time_limit_s_) return false;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start_).count() > *time_limit_s_;
}

long EvaluationLedger::elapsed_ms() const {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start_).count());
}

std::string EvaluationLedger::key_for(const Genotype& g) const {
  return spec_.normalizes() ? genotype_key(normalize_partition(g))
                            : genotype_key(g);
}

std::optional<double> EvaluationLedger::cached_fitness(
    const std::string& key) const {
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> EvaluationLedger::elitist_fitness() const {
  if (!elitist_) return std::nullopt;
  return elitist_->fitness;
}

double evaluate_real(Solution& s, EvaluationLedger& ledger,
                     const FitnessFn& fitness) {
  const std::string key = ledger.key_for(s.genotype);
  if (auto hit = ledger.cached_fitness(key)) {
    s.fitness = *hit;
    s.real_fitness_calculated = true;
    return *hit;
  }
  if (ledger.budget_exhausted()) throw BudgetExhausted();
  if (ledger.time_limit_exceeded()) throw TimeLimitExceeded();
  const double value = fitness(s.genotype);
  if (!std::isfinite(value)) {
    throw Error("fitness function returned a non-finite value");
  }
  ledger.cache_.emplace(key, value);
  ++ledger.count_;
  s.fitness = value;
  s.real_fitness_calculated = true;
  if (!ledger.elitist_ || value > *ledger.elitist_->fitness) {
    ledger.elitist_ = s;
    ledger.elitist_key_ = key;
    if (ledger.improve_hook_) ledger.improve_hook_(ledger.count_, value, key);
  }
  return value;
}

}  // namespace catopt
