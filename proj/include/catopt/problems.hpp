#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "catopt/genotype.hpp"

namespace catopt {

struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi labels;
  int num_classes = 0;
};

// comma-separated text, one header row, numeric feature columns, final
// integer class-label column
Dataset load_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

// columns mapped to [0,1] by min and max; constant columns become 0
void min_max_scale_features(Dataset& data);

struct SplitSpec {
  int train_size = 0;  // equals the optimized genotype length
  int validation_size = 500;
  int test_size = 500;
  uint64_t seed = 0;
};

struct DataSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
  int num_classes = 0;
};

// scales the full dataset, then draws disjoint train/validation/test subsets
// from a seeded shuffle
DataSplits split_dataset(const Dataset& data, const SplitSpec& split);
DataSplits load_and_split(const std::string& path, const SplitSpec& split);

class FittedLearner {
 public:
  virtual ~FittedLearner() = default;
  // rows sum to 1; one column per class
  virtual Eigen::MatrixXd predict_proba(
      const Eigen::Ref<const Eigen::MatrixXd>& x) const = 0;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::unique_ptr<FittedLearner> fit(
      const Eigen::Ref<const Eigen::MatrixXd>& x,
      const Eigen::Ref<const Eigen::VectorXi>& y, int num_classes) const = 0;
};

// L2-regularized multinomial logistic regression trained by full-batch
// gradient descent: zero init, step 0.5, exactly 200 iterations,
// regularization strength 1.0, bias folded in as a constant-1 feature.
// Degenerates to a constant one-hot predictor when only one class is present.
class LogisticLearner : public Learner {
 public:
  std::unique_ptr<FittedLearner> fit(
      const Eigen::Ref<const Eigen::MatrixXd>& x,
      const Eigen::Ref<const Eigen::VectorXi>& y,
      int num_classes) const override;
};

// Ensemble fitness of a partition genotype: one model per gene value over its
// subset of training rows, class probabilities averaged across fitted models,
// argmax with lowest-class ties, scored as validation accuracy.
double partition_fitness(const Genotype& g, const Dataset& train,
                         const Dataset& validation, int alphabet,
                         const Learner& learner);

// concatenated deceptive traps over a binary genotype: a block of size k
// scores k when all-ones, else k-1-u for u ones
double trap_fitness(const Genotype& g, int block_size);

// number of genes equal to 0
double categorical_onemax_fitness(const Genotype& g);

// Two latent regimes with class-dependent feature pairs that swap informative
// columns between regimes, so per-subset specialist models can beat a single
// model trained on everything.
Dataset make_synthetic_dataset(int num_samples, uint64_t seed);

}  // namespace catopt
