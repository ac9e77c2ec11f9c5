#pragma once

#include <functional>
#include <vector>

#include "catopt/genotype.hpp"
#include "catopt/linkage.hpp"

namespace catopt {

// -1 / 0 / 1 for x worse / equal / better. Compares real fitness when both
// sides have it, surrogate fitness when both sides have that, and throws
// MissingFitness otherwise.
int compare_solutions(const Solution& x, const Solution& y);

using EvalFn = std::function<void(Solution&)>;

// Gene-pool optimal mixing: walks FOS subsets in ascending size (equal sizes
// in random order); per subset scans a fresh random donor order, copies the
// subset's genes from the first donor that differs there, keeps the candidate
// when it is no worse, and moves on after that one donor either way.
Solution gom_improve(const Solution& parent,
                     const std::vector<Solution>& population, const Fos& fos,
                     const EvalFn& evaluate, Rng& rng);

}  // namespace catopt
