#include "catopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <vector>

#include "catopt/errors.hpp"
#include "catopt/rng.hpp"

namespace catopt {

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("dataset file is empty: " + path);
  const size_t cols = static_cast<size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols < 2) {
    throw ParseError("dataset needs at least one feature column and a label column");
  }

  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    size_t pos = 0;
    for (size_t c = 0; c < cols; ++c) {
      size_t comma = line.find(',', pos);
      if (c + 1 < cols) {
        if (comma == std::string::npos) {
          throw ParseError("row " + std::to_string(line_no) + " has too few columns");
        }
      } else if (comma != std::string::npos) {
        throw ParseError("row " + std::to_string(line_no) + " has too many columns");
      } else {
        comma = line.size();
      }
      const std::string field = line.substr(pos, comma - pos);
      char* end = nullptr;
      if (c + 1 < cols) {
        const double v = std::strtod(field.c_str(), &end);
        if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
          throw ParseError("bad numeric value '" + field + "' at row " + std::to_string(line_no));
        }
        values.push_back(v);
      } else {
        const long v = std::strtol(field.c_str(), &end, 10);
        if (field.empty() || end != field.c_str() + field.size() || v < 0) {
          throw ParseError("bad class label '" + field + "' at row " + std::to_string(line_no));
        }
        labels.push_back(static_cast<int>(v));
      }
      pos = comma + 1;
    }
  }
  if (labels.empty()) throw ParseError("dataset has no data rows: " + path);

  Dataset data;
  const Eigen::Index rows = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index nf = static_cast<Eigen::Index>(cols - 1);
  data.features.resize(rows, nf);
  data.labels.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < nf; ++c) data.features(r, c) = values[r * nf + c];
    data.labels[r] = labels[r];
  }
  data.num_classes = data.labels.maxCoeff() + 1;
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset file: " + path);
  const Eigen::Index nf = data.features.cols();
  for (Eigen::Index c = 0; c < nf; ++c) out << "f" << c << ",";
  out << "label\n";
  char buf[40];
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < nf; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features(r, c));
      out << buf << ",";
    }
    out << data.labels[r] << "\n";
  }
}

void min_max_scale_features(Dataset& data) {
  for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
    const double lo = data.features.col(c).minCoeff();
    const double hi = data.features.col(c).maxCoeff();
    if (hi > lo) {
      data.features.col(c) = (data.features.col(c).array() - lo) / (hi - lo);
    } else {
      data.features.col(c).setZero();
    }
  }
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<size_t>& perm,
                  size_t from, size_t count) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(count), data.features.cols());
  out.labels.resize(static_cast<Eigen::Index>(count));
  for (size_t r = 0; r < count; ++r) {
    out.features.row(r) = data.features.row(perm[from + r]);
    out.labels[r] = data.labels[perm[from + r]];
  }
  out.num_classes = data.num_classes;
  return out;
}

}  // namespace

DataSplits split_dataset(const Dataset& data, const SplitSpec& split) {
  if (split.train_size < 1 || split.validation_size < 1 || split.test_size < 1) {
    throw ConfigError("split sizes must be >= 1");
  }
  const long need = static_cast<long>(split.train_size) + split.validation_size + split.test_size;
  if (data.features.rows() < need) {
    throw TooFewSamples("dataset has " + std::to_string(data.features.rows()) +
                        " rows, split needs " + std::to_string(need));
  }
  Dataset scaled = data;
  min_max_scale_features(scaled);
  Rng rng(split.seed);
  const std::vector<size_t> perm = rng.permutation(static_cast<size_t>(data.features.rows()));
  DataSplits out;
  out.train = take_rows(scaled, perm, 0, split.train_size);
  out.validation = take_rows(scaled, perm, split.train_size, split.validation_size);
  out.test = take_rows(scaled, perm, static_cast<size_t>(split.train_size) + split.validation_size,
                       split.test_size);
  out.num_classes = data.num_classes;
  return out;
}

DataSplits load_and_split(const std::string& path, const SplitSpec& split) {
  return split_dataset(load_dataset_csv(path), split);
}

namespace {

class LogisticFitted : public FittedLearner {
 public:
  explicit LogisticFitted(Eigen::MatrixXd w) : w_(std::move(w)) {}

  Eigen::MatrixXd predict_proba(
      const Eigen::Ref<const Eigen::MatrixXd>& x) const override {
    Eigen::MatrixXd xb(x.rows(), x.cols() + 1);
    xb << x, Eigen::VectorXd::Ones(x.rows());
    Eigen::MatrixXd z = xb * w_.transpose();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      const double zmax = z.row(r).maxCoeff();
      z.row(r) = (z.row(r).array() - zmax).exp();
      z.row(r) /= z.row(r).sum();
    }
    return z;
  }

 private:
  Eigen::MatrixXd w_;
};

class ConstantFitted : public FittedLearner {
 public:
  ConstantFitted(int cls, int num_classes) : cls_(cls), num_classes_(num_classes) {}

  Eigen::MatrixXd predict_proba(
      const Eigen::Ref<const Eigen::MatrixXd>& x) const override {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(x.rows(), num_classes_);
    p.col(cls_).setOnes();
    return p;
  }

 private:
  int cls_;
  int num_classes_;
};

}  // namespace

std::unique_ptr<FittedLearner> LogisticLearner::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Eigen::Ref<const Eigen::VectorXi>& y, int num_classes) const {
  const Eigen::Index m = x.rows();
  if (m < 1) throw TooFewSamples("learner got an empty training subset");
  if (y.size() != m) throw DimensionMismatch("labels do not match feature rows");

  bool single = true;
  for (Eigen::Index i = 1; i < m && single; ++i) single = y[i] == y[0];
  if (single) return std::make_unique<ConstantFitted>(y[0], num_classes);

  Eigen::MatrixXd xb(m, x.cols() + 1);
  xb << x, Eigen::VectorXd::Ones(m);
  Eigen::MatrixXd yh = Eigen::MatrixXd::Zero(m, num_classes);
  for (Eigen::Index i = 0; i < m; ++i) yh(i, y[i]) = 1.0;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_classes, xb.cols());
  Eigen::MatrixXd z, p, grad;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int iter = 0; iter < 200; ++iter) {
    z = xb * w.transpose();
    for (Eigen::Index r = 0; r < m; ++r) {
      const double zmax = z.row(r).maxCoeff();
      z.row(r) = (z.row(r).array() - zmax).exp();
      z.row(r) /= z.row(r).sum();
    }
    grad = ((z - yh).transpose() * xb + w) * inv_m;
    w -= 0.5 * grad;
  }
  return std::make_unique<LogisticFitted>(std::move(w));
}

double partition_fitness(const Genotype& g, const Dataset& train,
                         const Dataset& validation, int alphabet,
                         const Learner& learner) {
  if (static_cast<Eigen::Index>(g.size()) != train.features.rows()) {
    throw DimensionMismatch("genotype length does not match training rows");
  }
  const Genotype norm = normalize_partition(g);
  const int num_classes = train.num_classes;

  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(validation.features.rows(), num_classes);
  int models = 0;
  std::vector<int> rows;
  for (int k = 0; k < alphabet; ++k) {
    rows.clear();
    for (size_t i = 0; i < norm.size(); ++i) {
      if (norm[i] == k) rows.push_back(static_cast<int>(i));
    }
    if (rows.empty()) continue;
    Eigen::MatrixXd xk(static_cast<Eigen::Index>(rows.size()), train.features.cols());
    Eigen::VectorXi yk(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      xk.row(r) = train.features.row(rows[r]);
      yk[r] = train.labels[rows[r]];
    }
    const auto fitted = learner.fit(xk, yk, num_classes);
    avg += fitted->predict_proba(validation.features);
    ++models;
  }
  if (models == 0) throw NoTrainingData();
  avg /= static_cast<double>(models);

  long correct = 0;
  for (Eigen::Index r = 0; r < avg.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c) {
      if (avg(r, c) > avg(r, best)) best = c;
    }
    if (best == validation.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(avg.rows());
}

double trap_fitness(const Genotype& g, int block_size) {
  if (block_size < 1 || g.size() % static_cast<size_t>(block_size) != 0) {
    throw BadBlockSize("genotype length must be a positive multiple of the block size");
  }
  double total = 0.0;
  for (size_t b = 0; b < g.size(); b += block_size) {
    int u = 0;
    for (int i = 0; i < block_size; ++i) u += g[b + i] == 1 ? 1 : 0;
    total += u == block_size ? block_size : block_size - 1 - u;
  }
  return total;
}

double categorical_onemax_fitness(const Genotype& g) {
  long zeros = 0;
  for (const int v : g) zeros += v == 0 ? 1 : 0;
  return static_cast<double>(zeros);
}

// Two latent regimes whose class geometry is rotated half a turn against each
// other, so a single pooled linear model self-cancels while models trained on
// regime-pure subsets separate the classes cleanly.
Dataset make_synthetic_dataset(int num_samples, uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  data.features.resize(num_samples, 6);
  data.labels.resize(num_samples);
  data.num_classes = 3;

  const double tau = 2.0 * 3.14159265358979323846;
  const double noise = 0.35;
  for (int r = 0; r < num_samples; ++r) {
    const int regime = static_cast<int>(rng.next_index(2));
    const int cls = static_cast<int>(rng.next_index(3));
    const double ang = tau * cls / 3.0 + (tau / 2.0) * regime;
    const double cx = std::cos(ang);
    const double cy = std::sin(ang);
    data.features(r, 0) = cx + noise * rng.normal();
    data.features(r, 1) = cy + noise * rng.normal();
    data.features(r, 2) = cx + noise * rng.normal();
    data.features(r, 3) = cy + noise * rng.normal();
    data.features(r, 4) = regime + 0.15 * rng.normal();
    data.features(r, 5) = rng.normal();
    data.labels[r] = cls;
  }
  return data;
}

}  // namespace catopt
