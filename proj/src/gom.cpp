#include "catopt/gom.hpp"

#include <algorithm>
#include <numeric>

#include "catopt/errors.hpp"

namespace catopt {

int compare_solutions(const Solution& x, const Solution& y) {
  if (x.real_fitness_calculated && y.real_fitness_calculated) {
    if (!x.fitness || !y.fitness) throw MissingFitness();
    const double fx = *x.fitness;
    const double fy = *y.fitness;
    return fx < fy ? -1 : (fx > fy ? 1 : 0);
  }
  if (x.surrogate_fitness && y.surrogate_fitness) {
    const double fx = *x.surrogate_fitness;
    const double fy = *y.surrogate_fitness;
    return fx < fy ? -1 : (fx > fy ? 1 : 0);
  }
  throw MissingFitness();
}

Solution gom_improve(const Solution& parent,
                     const std::vector<Solution>& population, const Fos& fos,
                     const EvalFn& evaluate, Rng& rng) {
  Solution current = parent;
  const size_t pop = population.size();

  std::vector<size_t> order = rng.permutation(fos.subsets.size());
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return fos.subsets[a].size() < fos.subsets[b].size();
  });

  std::vector<size_t> donors(pop);
  for (const size_t oi : order) {
    const std::vector<int>& subset = fos.subsets[oi];
    std::iota(donors.begin(), donors.end(), size_t{0});
    // lazily materialized random donor order: stop at the first donor that
    // differs from the current genes on the subset
    for (size_t t = 0; t < pop; ++t) {
      std::swap(donors[t], donors[t + rng.next_index(pop - t)]);
      const Genotype& donor = population[donors[t]].genotype;
      bool differs = false;
      for (const int v : subset) {
        if (donor[v] != current.genotype[v]) {
          differs = true;
          break;
        }
      }
      if (!differs) continue;

      Solution candidate;
      candidate.genotype = current.genotype;
      for (const int v : subset) candidate.genotype[v] = donor[v];
      evaluate(candidate);
      if (compare_solutions(candidate, current) >= 0) {
        current = std::move(candidate);
      }
      break;
    }
  }
  return current;
}

}  // namespace catopt
