#pragma once

#include <Eigen/Dense>
#include <vector>

#include "catopt/genotype.hpp"
#include "catopt/rng.hpp"

namespace catopt {

using NmiMatrix = Eigen::MatrixXd;

// Pairwise gene-value contingency tables over a population, maintained
// incrementally so a growing population pays O(l^2) per insertion instead of
// O(l^2 n) per matrix rebuild.
class PairCounts {
 public:
  PairCounts(int num_vars, int alphabet);

  void add(const Genotype& g);
  long population_size() const { return n_; }
  int num_vars() const { return l_; }

  // joint counts for variable pair (i, j), i < j, as an alphabet x alphabet
  // matrix indexed [value_i][value_j]
  const std::vector<int64_t>& pair_table(int i, int j) const;

  NmiMatrix nmi_matrix() const;

 private:
  int l_;
  int alpha_;
  long n_ = 0;
  std::vector<std::vector<int64_t>> tables_;
};

// Symmetric l x l matrix of normalized mutual information
// I(X_i;X_j)/H(X_i,X_j) from empirical frequencies, natural log, diagonal 1,
// zero joint entropy mapped to 0. Throws EmptyPopulation.
NmiMatrix estimate_nmi_matrix(const std::vector<Genotype>& population,
                              int alphabet);

struct LinkageTreeNode {
  std::vector<int> vars;  // sorted
  int child_a = -1;
  int child_b = -1;
  double merge_similarity = 0.0;  // meaningful for merged nodes only
};

// Bottom-up UPGMA clustering on the similarity matrix: l singletons followed
// by l-1 merges in merge order, 2l-1 nodes total. Merge ties are broken
// uniformly at random.
std::vector<LinkageTreeNode> build_linkage_tree(const NmiMatrix& similarity,
                                                Rng& rng);

struct Fos {
  std::vector<std::vector<int>> subsets;
};

// Linkage tree with the root removed and, wherever children merged at
// similarity 1 (within 1e-6), both children removed in favor of the parent.
Fos build_filtered_linkage_tree(const NmiMatrix& similarity, Rng& rng);

}  // namespace catopt
