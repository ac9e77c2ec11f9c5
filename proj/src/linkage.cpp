#include "catopt/linkage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "catopt/errors.hpp"

namespace catopt {

namespace {

inline double entropy_term(int64_t c, double n) {
  const double p = static_cast<double>(c) / n;
  return -p * std::log(p);
}

}  // namespace

PairCounts::PairCounts(int num_vars, int alphabet)
    : l_(num_vars), alpha_(alphabet) {
  const size_t pairs = static_cast<size_t>(l_) * (l_ - 1) / 2;
  tables_.resize(pairs);
  for (auto& t : tables_) t.assign(static_cast<size_t>(alpha_) * alpha_, 0);
}

namespace {
inline size_t pair_index(int i, int j, int l) {
  return static_cast<size_t>(i) * (l - 1) - static_cast<size_t>(i) * (i - 1) / 2 +
         static_cast<size_t>(j - i - 1);
}
}  // namespace

void PairCounts::add(const Genotype& g) {
  for (int i = 0; i < l_; ++i) {
    const int base = g[i] * alpha_;
    auto* row = tables_.data() + pair_index(i, i + 1, l_);
    for (int j = i + 1; j < l_; ++j) {
      ++(*row)[base + g[j]];
      ++row;
    }
  }
  ++n_;
}

const std::vector<int64_t>& PairCounts::pair_table(int i, int j) const {
  return tables_[pair_index(i, j, l_)];
}

NmiMatrix PairCounts::nmi_matrix() const {
  if (n_ == 0) throw EmptyPopulation();
  NmiMatrix m = NmiMatrix::Zero(l_, l_);
  const double n = static_cast<double>(n_);
  std::vector<int64_t> row_sum(alpha_), col_sum(alpha_);
  for (int i = 0; i < l_; ++i) {
    m(i, i) = 1.0;
    for (int j = i + 1; j < l_; ++j) {
      const auto& t = tables_[pair_index(i, j, l_)];
      std::fill(row_sum.begin(), row_sum.end(), 0);
      std::fill(col_sum.begin(), col_sum.end(), 0);
      double h_joint = 0.0;
      for (int a = 0; a < alpha_; ++a) {
        for (int b = 0; b < alpha_; ++b) {
          const int64_t c = t[a * alpha_ + b];
          if (c > 0) h_joint += entropy_term(c, n);
          row_sum[a] += c;
          col_sum[b] += c;
        }
      }
      double value = 0.0;
      if (h_joint > 0.0) {
        double h_i = 0.0, h_j = 0.0;
        for (int a = 0; a < alpha_; ++a) {
          if (row_sum[a] > 0) h_i += entropy_term(row_sum[a], n);
          if (col_sum[a] > 0) h_j += entropy_term(col_sum[a], n);
        }
        value = (h_i + h_j - h_joint) / h_joint;
        value = std::clamp(value, 0.0, 1.0);
      }
      m(i, j) = m(j, i) = value;
    }
  }
  return m;
}

NmiMatrix estimate_nmi_matrix(const std::vector<Genotype>& population,
                              int alphabet) {
  if (population.empty()) throw EmptyPopulation();
  PairCounts counts(static_cast<int>(population.front().size()), alphabet);
  for (const auto& g : population) counts.add(g);
  return counts.nmi_matrix();
}

std::vector<LinkageTreeNode> build_linkage_tree(const NmiMatrix& similarity,
                                                Rng& rng) {
  const int l = static_cast<int>(similarity.rows());
  if (l < 1) throw EmptyPopulation();
  std::vector<LinkageTreeNode> nodes;
  nodes.reserve(2 * static_cast<size_t>(l) - 1);
  for (int i = 0; i < l; ++i) nodes.push_back({{i}, -1, -1, 0.0});
  if (l == 1) return nodes;

  std::vector<int> act(l);
  std::iota(act.begin(), act.end(), 0);
  Eigen::MatrixXd s = similarity;
  int m = l;
  std::vector<std::pair<int, int>> ties;
  while (m > 1) {
    double best = -1.0;
    ties.clear();
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        const double v = s(a, b);
        if (v > best) {
          best = v;
          ties.clear();
          ties.emplace_back(a, b);
        } else if (v == best) {
          ties.emplace_back(a, b);
        }
      }
    }
    const auto [a, b] =
        ties.size() == 1 ? ties[0] : ties[rng.next_index(ties.size())];

    const auto& va = nodes[act[a]].vars;
    const auto& vb = nodes[act[b]].vars;
    LinkageTreeNode merged;
    merged.vars.resize(va.size() + vb.size());
    std::merge(va.begin(), va.end(), vb.begin(), vb.end(),
               merged.vars.begin());
    merged.child_a = act[a];
    merged.child_b = act[b];
    merged.merge_similarity = best;

    const double wa = static_cast<double>(va.size());
    const double wb = static_cast<double>(vb.size());
    for (int k = 0; k < m; ++k) {
      if (k == a || k == b) continue;
      const double v = (wa * s(a, k) + wb * s(b, k)) / (wa + wb);
      s(a, k) = s(k, a) = v;
    }
    act[a] = static_cast<int>(nodes.size());
    nodes.push_back(std::move(merged));

    const int last = m - 1;
    if (b != last) {
      act[b] = act[last];
      for (int k = 0; k < m; ++k) {
        s(b, k) = s(last, k);
        s(k, b) = s(k, last);
      }
      s(b, b) = s(last, last);
    }
    --m;
  }
  return nodes;
}

Fos build_filtered_linkage_tree(const NmiMatrix& similarity, Rng& rng) {
  std::vector<LinkageTreeNode> nodes = build_linkage_tree(similarity, rng);
  if (nodes.empty()) return {};
  std::vector<char> keep(nodes.size(), 1);
  for (const auto& nd : nodes) {
    if (nd.child_a >= 0 && nd.merge_similarity >= 1.0 - 1e-6) {
      keep[nd.child_a] = 0;
      keep[nd.child_b] = 0;
    }
  }
  Fos fos;
  for (size_t i = 0; i + 1 < nodes.size(); ++i) {
    if (keep[i]) fos.subsets.push_back(nodes[i].vars);
  }
  return fos;
}

}  // namespace catopt
