#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "catopt/genotype.hpp"

namespace catopt {

enum class RegressorKind { svr, random_forest };
enum class SvrKernel { rbf, sigmoid };

struct SvrHyper {
  SvrKernel kernel = SvrKernel::rbf;
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0 means 1/num_features, resolved at training time
};

struct RfHyper {
  int num_trees = 10;
  int min_samples_split = 1;  // 1 disables the constraint
  int min_samples_leaf = 1;
  double ratio_features = 1.0;
};

struct Hyperparams {
  RegressorKind kind = RegressorKind::svr;
  SvrHyper svr;
  RfHyper rf;
};

// {2,0,1} over alphabet 3 -> [0,0,1, 1,0,0, 0,1,0]
Eigen::VectorXd one_hot_encode(const Genotype& g, int alphabet);
Eigen::MatrixXd one_hot_encode_all(const std::vector<Genotype>& gs,
                                   int alphabet);

class Model {
 public:
  virtual ~Model() = default;
  virtual double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  virtual int dimension() const = 0;
};

struct SvrFit {
  Eigen::VectorXd beta;  // alpha - alpha_star per sample
  double bias = 0.0;
};

// eps-SVR dual solved by sequential minimal optimization on a precomputed
// kernel matrix. Pair selection picks the most violating pair, lowest index
// on ties; stops when the KKT gap drops to kkt_tol.
SvrFit smo_solve(const Eigen::Ref<const Eigen::MatrixXd>& kernel,
                 const Eigen::Ref<const Eigen::VectorXd>& y, double c,
                 double epsilon, double kkt_tol = 1e-3);

Eigen::MatrixXd compute_kernel_matrix(
    SvrKernel kernel, double gamma, const Eigen::Ref<const Eigen::MatrixXd>& x);

class SvrModel : public Model {
 public:
  SvrModel(SvrKernel kernel, double gamma, Eigen::MatrixXd support_x,
           Eigen::VectorXd support_beta, double bias);
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  int dimension() const override { return static_cast<int>(support_x_.cols()); }
  int support_count() const { return static_cast<int>(beta_.size()); }
  double bias() const { return bias_; }

 private:
  SvrKernel kernel_;
  double gamma_;
  Eigen::MatrixXd support_x_;
  Eigen::VectorXd support_sqnorm_;
  Eigen::VectorXd beta_;
  double bias_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

class ForestModel : public Model {
 public:
  ForestModel(std::vector<RegressionTree> trees, int dimension)
      : trees_(std::move(trees)), dim_(dimension) {}
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  int dimension() const override { return dim_; }
  int tree_count() const { return static_cast<int>(trees_.size()); }

 private:
  std::vector<RegressionTree> trees_;
  int dim_;
};

// Bootstrapped variance-reduction trees with per-split feature subsampling,
// averaged by mean. Deterministic for a fixed seed.
std::unique_ptr<ForestModel> train_forest(
    const RfHyper& hyper, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y, uint64_t seed);

std::unique_ptr<Model> train_regressor(
    const Hyperparams& hyper, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXd>& y, uint64_t seed);

struct TuneResult {
  Hyperparams best;
  int candidates_evaluated = 0;
};

// One-shot 3-fold cross-validated grid search by mean squared error; ties
// keep the earliest grid entry. svr: kernel in {rbf, sigmoid}. rf:
// min_samples_split x min_samples_leaf in {1,3,10}^2, ratio_features in
// {5/6, 1}.
TuneResult tune_hyperparameters(RegressorKind kind,
                                const Eigen::Ref<const Eigen::MatrixXd>& x,
                                const Eigen::Ref<const Eigen::VectorXd>& y,
                                uint64_t seed);

// Kernel matrix over an append-only sample archive, grown one row per new
// sample so refits cost O(n d) in kernel work instead of O(n^2 d).
class SvrKernelCache {
 public:
  SvrKernelCache(SvrKernel kernel, double gamma, int dimension);

  void append(const Eigen::Ref<const Eigen::VectorXd>& x);
  int size() const { return n_; }
  int dimension() const { return dim_; }
  SvrKernel kernel() const { return kernel_; }
  double gamma() const { return gamma_; }

  Eigen::Ref<const Eigen::MatrixXd> kernel_matrix() const {
    return k_.topLeftCorner(n_, n_);
  }
  Eigen::Ref<const Eigen::MatrixXd> samples() const {
    return x_.topRows(n_);
  }

 private:
  void grow(int need);

  SvrKernel kernel_;
  double gamma_;
  int dim_;
  int n_ = 0;
  Eigen::MatrixXd x_;
  Eigen::VectorXd sqnorm_;
  Eigen::MatrixXd k_;
};

}  // namespace catopt
