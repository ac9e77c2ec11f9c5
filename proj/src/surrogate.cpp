#include "catopt/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "catopt/errors.hpp"
#include "catopt/rng.hpp"

namespace catopt {

Eigen::VectorXd one_hot_encode(const Genotype& g, int alphabet) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()) * alphabet);
  for (size_t i = 0; i < g.size(); ++i) x[i * alphabet + g[i]] = 1.0;
  return x;
}

Eigen::MatrixXd one_hot_encode_all(const std::vector<Genotype>& gs,
                                   int alphabet) {
  if (gs.empty()) return Eigen::MatrixXd(0, 0);
  const Eigen::Index d = static_cast<Eigen::Index>(gs.front().size()) * alphabet;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(gs.size(), d);
  for (size_t r = 0; r < gs.size(); ++r) {
    for (size_t i = 0; i < gs[r].size(); ++i) {
      x(r, i * alphabet + gs[r][i]) = 1.0;
    }
  }
  return x;
}

Eigen::MatrixXd compute_kernel_matrix(
    SvrKernel kernel, double gamma,
    const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd dots = x * x.transpose();
  if (kernel == SvrKernel::sigmoid) {
    return (gamma * dots.array()).tanh();
  }
  Eigen::VectorXd sq = dots.diagonal();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      k(i, j) = std::exp(-gamma * (sq[i] + sq[j] - 2.0 * dots(i, j)));
    }
  }
  return k;
}

SvrFit smo_solve(const Eigen::Ref<const Eigen::MatrixXd>& kernel,
                 const Eigen::Ref<const Eigen::VectorXd>& y, double c,
                 double epsilon, double kkt_tol) {
  const int n = static_cast<int>(y.size());
  if (kernel.rows() != n || kernel.cols() != n) {
    throw DimensionMismatch("kernel matrix does not match target count");
  }
  const double inf = std::numeric_limits<double>::infinity();
  const double snap = 1e-12 * std::max(1.0, c);

  // 2n box variables: index t < n is alpha_t (sign +1), t >= n is
  // alpha*_{t-n} (sign -1); g excludes the bias term throughout
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2 * n);
  Eigen::VectorXd g(2 * n);
  g.head(n) = Eigen::VectorXd::Constant(n, epsilon) - y;
  g.tail(n) = Eigen::VectorXd::Constant(n, epsilon) + y;

  const long max_iter = 20000 + 20L * n;
  Eigen::VectorXd delta(n);
  for (long it = 0; it < max_iter; ++it) {
    double m_up = -inf, m_low = inf;
    int i = -1, j = -1;
    for (int t = 0; t < 2 * n; ++t) {
      const bool plus = t < n;
      const double at = a[t];
      const double v = plus ? -g[t] : g[t];
      if (plus ? at < c : at > 0.0) {
        if (v > m_up) {
          m_up = v;
          i = t;
        }
      }
      if (plus ? at > 0.0 : at < c) {
        if (v < m_low) {
          m_low = v;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || m_up - m_low <= kkt_tol) break;

    const int ii = i % n, jj = j % n;
    double quad = kernel(ii, ii) + kernel(jj, jj) - 2.0 * kernel(ii, jj);
    if (quad <= 0.0) quad = 1e-12;
    const double zi = i < n ? 1.0 : -1.0;
    const double zj = j < n ? 1.0 : -1.0;
    const double cap_i = zi > 0.0 ? c - a[i] : a[i];
    const double cap_j = zj > 0.0 ? a[j] : c - a[j];
    double step = std::min({(m_up - m_low) / quad, cap_i, cap_j});
    if (step <= 0.0) break;

    a[i] += zi * step;
    a[j] -= zj * step;
    for (const int t : {i, j}) {
      if (a[t] < snap) a[t] = 0.0;
      if (a[t] > c - snap) a[t] = c;
    }
    delta = step * (kernel.col(ii) - kernel.col(jj));
    g.head(n) += delta;
    g.tail(n) -= delta;
  }

  double m_up = -inf, m_low = inf, free_sum = 0.0;
  int free_count = 0;
  for (int t = 0; t < 2 * n; ++t) {
    const bool plus = t < n;
    const double at = a[t];
    const double v = plus ? -g[t] : g[t];
    if (at > 0.0 && at < c) {
      free_sum += v;
      ++free_count;
    }
    if (plus ? at < c : at > 0.0) m_up = std::max(m_up, v);
    if (plus ? at > 0.0 : at < c) m_low = std::min(m_low, v);
  }
  double bias = 0.0;
  if (free_count > 0) {
    bias = free_sum / free_count;
  } else if (std::isfinite(m_up) && std::isfinite(m_low)) {
    bias = 0.5 * (m_up + m_low);
  } else if (std::isfinite(m_up)) {
    bias = m_up;
  } else if (std::isfinite(m_low)) {
    bias = m_low;
  }

  SvrFit fit;
  fit.beta = a.head(n) - a.tail(n);
  fit.bias = bias;
  return fit;
}

SvrModel::SvrModel(SvrKernel kernel, double gamma, Eigen::MatrixXd support_x,
                   Eigen::VectorXd support_beta, double bias)
    : kernel_(kernel),
      gamma_(gamma),
      support_x_(std::move(support_x)),
      support_sqnorm_(support_x_.rowwise().squaredNorm()),
      beta_(std::move(support_beta)),
      bias_(bias) {}

double SvrModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != support_x_.cols()) {
    throw DimensionMismatch("prediction input has wrong dimension");
  }
  if (beta_.size() == 0) return bias_;
  const Eigen::VectorXd dots = support_x_ * x;
  double acc;
  if (kernel_ == SvrKernel::rbf) {
    const double xsq = x.squaredNorm();
    acc = beta_.dot(
        (-gamma_ * (support_sqnorm_.array() + xsq - 2.0 * dots.array()))
            .exp()
            .matrix());
  } else {
    acc = beta_.dot((gamma_ * dots.array()).tanh().matrix());
  }
  return acc + bias_;
}

double RegressionTree::predict(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int id = 0;
  while (nodes[id].feature >= 0) {
    id = x[nodes[id].feature] <= nodes[id].threshold ? nodes[id].left
                                                     : nodes[id].right;
  }
  return nodes[id].value;
}

double ForestModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) {
    throw DimensionMismatch("prediction input has wrong dimension");
  }
  double acc = 0.0;
  for (const auto& t : trees_) acc += t.predict(x);
  return acc / static_cast<double>(trees_.size());
}

namespace {

struct TreeGrower {
  Eigen::Ref<const Eigen::MatrixXd> x;
  Eigen::Ref<const Eigen::VectorXd> y;
  const RfHyper& hp;
  Rng& rng;
  int num_features;
  int subsample;
  int min_split;
  std::vector<TreeNode> nodes;
  std::vector<int> feature_pool;
  std::vector<std::pair<double, int>> sorted;

  int grow(const std::vector<int>& idx) {
    const int m = static_cast<int>(idx.size());
    double sum = 0.0, ymin = std::numeric_limits<double>::infinity(),
           ymax = -std::numeric_limits<double>::infinity();
    for (const int r : idx) {
      const double v = y[r];
      sum += v;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[id].value = sum / m;
    if (m < 2 || m < min_split || ymin == ymax) return id;

    for (int t = 0; t < subsample; ++t) {
      std::swap(feature_pool[t],
                feature_pool[t + rng.next_index(num_features - t)]);
    }

    int best_f = -1;
    double best_thr = 0.0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int t = 0; t < subsample; ++t) {
      const int f = feature_pool[t];
      sorted.clear();
      for (const int r : idx) sorted.emplace_back(x(r, f), r);
      std::sort(sorted.begin(), sorted.end());
      double lsum = 0.0, lsumsq = 0.0;
      double tsumsq = 0.0;
      for (const auto& [v, r] : sorted) tsumsq += y[r] * y[r];
      const double tsum = sum;
      for (int p = 1; p < m; ++p) {
        const double yv = y[sorted[p - 1].second];
        lsum += yv;
        lsumsq += yv * yv;
        if (sorted[p - 1].first >= sorted[p].first) continue;
        if (p < hp.min_samples_leaf || m - p < hp.min_samples_leaf) continue;
        const double rsum = tsum - lsum;
        const double rsumsq = tsumsq - lsumsq;
        const double sse = (lsumsq - lsum * lsum / p) +
                           (rsumsq - rsum * rsum / (m - p));
        if (sse < best_sse) {
          best_sse = sse;
          best_f = f;
          best_thr = 0.5 * (sorted[p - 1].first + sorted[p].first);
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<int> left, right;
    left.reserve(m);
    right.reserve(m);
    for (const int r : idx) {
      (x(r, best_f) <= best_thr ? left : right).push_back(r);
    }
    nodes[id].feature = best_f;
    nodes[id].threshold = best_thr;
    const int lid = grow(left);
    nodes[id].left = lid;
    const int rid = grow(right);
    nodes[id].right = rid;
    return id;
  }
};

}  // namespace

std::unique_ptr<ForestModel> train_forest(
    const RfHyper& hyper, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y, uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  if (n < 2) throw TooFewSamples("regressor training needs at least 2 samples");
  Rng rng(seed);
  TreeGrower grower{x,
                    y,
                    hyper,
                    rng,
                    d,
                    std::max(1, std::min(d, static_cast<int>(std::ceil(
                                                hyper.ratio_features * d -
                                                1e-9)))),
                    std::max(2, hyper.min_samples_split),
                    {},
                    {},
                    {}};
  grower.feature_pool.resize(d);
  std::vector<RegressionTree> trees;
  trees.reserve(hyper.num_trees);
  std::vector<int> idx(n);
  for (int t = 0; t < hyper.num_trees; ++t) {
    for (int r = 0; r < n; ++r) idx[r] = static_cast<int>(rng.next_index(n));
    std::iota(grower.feature_pool.begin(), grower.feature_pool.end(), 0);
    grower.nodes.clear();
    grower.grow(idx);
    trees.push_back({std::move(grower.nodes)});
    grower.nodes = {};
  }
  return std::make_unique<ForestModel>(std::move(trees), d);
}

std::unique_ptr<Model> train_regressor(
    const Hyperparams& hyper, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y, uint64_t seed) {
  if (x.rows() != y.size()) {
    throw DimensionMismatch("feature rows do not match target count");
  }
  if (x.rows() < 2) {
    throw TooFewSamples("regressor training needs at least 2 samples");
  }
  if (hyper.kind == RegressorKind::random_forest) {
    return train_forest(hyper.rf, x, y, seed);
  }
  const double gamma =
      hyper.svr.gamma > 0.0 ? hyper.svr.gamma : 1.0 / static_cast<double>(x.cols());
  const Eigen::MatrixXd k = compute_kernel_matrix(hyper.svr.kernel, gamma, x);
  const SvrFit fit = smo_solve(k, y, hyper.svr.c, hyper.svr.epsilon);
  std::vector<int> sv;
  for (int i = 0; i < fit.beta.size(); ++i) {
    if (std::abs(fit.beta[i]) > 1e-12) sv.push_back(i);
  }
  Eigen::MatrixXd sx(static_cast<Eigen::Index>(sv.size()), x.cols());
  Eigen::VectorXd sb(static_cast<Eigen::Index>(sv.size()));
  for (size_t s = 0; s < sv.size(); ++s) {
    sx.row(s) = x.row(sv[s]);
    sb[s] = fit.beta[sv[s]];
  }
  return std::make_unique<SvrModel>(hyper.svr.kernel, gamma, std::move(sx),
                                    std::move(sb), fit.bias);
}

namespace {

std::vector<Hyperparams> tuning_grid(RegressorKind kind) {
  std::vector<Hyperparams> grid;
  if (kind == RegressorKind::svr) {
    for (const SvrKernel k : {SvrKernel::rbf, SvrKernel::sigmoid}) {
      Hyperparams h;
      h.kind = RegressorKind::svr;
      h.svr.kernel = k;
      grid.push_back(h);
    }
  } else {
    for (const int msplit : {1, 3, 10}) {
      for (const int mleaf : {1, 3, 10}) {
        for (const double ratio : {5.0 / 6.0, 1.0}) {
          Hyperparams h;
          h.kind = RegressorKind::random_forest;
          h.rf.min_samples_split = msplit;
          h.rf.min_samples_leaf = mleaf;
          h.rf.ratio_features = ratio;
          grid.push_back(h);
        }
      }
    }
  }
  return grid;
}

}  // namespace

TuneResult tune_hyperparameters(RegressorKind kind,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                uint64_t seed) {
  const int n = static_cast<int>(x.rows());
  if (n < 3 || y.size() != n) {
    throw TooFewSamples("hyperparameter tuning needs at least 3 samples");
  }
  Rng rng(seed);
  const std::vector<size_t> perm = rng.permutation(n);

  const int base = n / 3, rem = n % 3;
  std::array<std::vector<int>, 3> fold_rows;
  size_t at = 0;
  for (int f = 0; f < 3; ++f) {
    const int size = base + (f < rem ? 1 : 0);
    for (int s = 0; s < size; ++s) fold_rows[f].push_back(static_cast<int>(perm[at++]));
  }

  struct FoldData {
    Eigen::MatrixXd xtr, xte;
    Eigen::VectorXd ytr, yte;
  };
  std::array<FoldData, 3> folds;
  for (int f = 0; f < 3; ++f) {
    std::vector<int> train_rows;
    for (int g = 0; g < 3; ++g) {
      if (g != f) train_rows.insert(train_rows.end(), fold_rows[g].begin(), fold_rows[g].end());
    }
    auto& fd = folds[f];
    fd.xtr.resize(static_cast<Eigen::Index>(train_rows.size()), x.cols());
    fd.ytr.resize(static_cast<Eigen::Index>(train_rows.size()));
    for (size_t r = 0; r < train_rows.size(); ++r) {
      fd.xtr.row(r) = x.row(train_rows[r]);
      fd.ytr[r] = y[train_rows[r]];
    }
    fd.xte.resize(static_cast<Eigen::Index>(fold_rows[f].size()), x.cols());
    fd.yte.resize(static_cast<Eigen::Index>(fold_rows[f].size()));
    for (size_t r = 0; r < fold_rows[f].size(); ++r) {
      fd.xte.row(r) = x.row(fold_rows[f][r]);
      fd.yte[r] = y[fold_rows[f][r]];
    }
  }

  const std::vector<Hyperparams> grid = tuning_grid(kind);
  double best_score = std::numeric_limits<double>::infinity();
  size_t best_idx = 0;
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    double total = 0.0;
    for (const auto& fd : folds) {
      const auto model = train_regressor(grid[gi], fd.xtr, fd.ytr, seed);
      double mse = 0.0;
      for (Eigen::Index r = 0; r < fd.xte.rows(); ++r) {
        const double e = model->predict(fd.xte.row(r).transpose()) - fd.yte[r];
        mse += e * e;
      }
      total += mse / static_cast<double>(fd.xte.rows());
    }
    const double score = total / 3.0;
    if (score < best_score) {
      best_score = score;
      best_idx = gi;
    }
  }
  return {grid[best_idx], static_cast<int>(grid.size())};
}

SvrKernelCache::SvrKernelCache(SvrKernel kernel, double gamma, int dimension)
    : kernel_(kernel), gamma_(gamma), dim_(dimension) {
  if (gamma_ <= 0.0) gamma_ = 1.0 / static_cast<double>(dim_);
}

void SvrKernelCache::grow(int need) {
  const int cap = static_cast<int>(x_.rows());
  if (need <= cap) return;
  const int newcap = std::max(need, std::max(16, 2 * cap));
  x_.conservativeResize(newcap, dim_);
  sqnorm_.conservativeResize(newcap);
  k_.conservativeResize(newcap, newcap);
}

void SvrKernelCache::append(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != dim_) {
    throw DimensionMismatch("kernel cache input has wrong dimension");
  }
  grow(n_ + 1);
  x_.row(n_) = x.transpose();
  sqnorm_[n_] = x.squaredNorm();
  const Eigen::VectorXd dots = x_.topRows(n_ + 1) * x;
  for (int i = 0; i <= n_; ++i) {
    const double v =
        kernel_ == SvrKernel::rbf
            ? std::exp(-gamma_ * (sqnorm_[i] + sqnorm_[n_] - 2.0 * dots[i]))
            : std::tanh(gamma_ * dots[i]);
    k_(i, n_) = v;
    k_(n_, i) = v;
  }
  ++n_;
}

}  // namespace catopt
