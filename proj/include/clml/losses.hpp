#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace clml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kDefaultThreshold = 0.5;
inline constexpr double kBceEpsilon = 1e-7;

/// N x K matrix whose entries are all 0 or 1.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  explicit LabelMatrix(BinaryMatrix values);

  static LabelMatrix zeros(Eigen::Index rows, Eigen::Index cols);

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  std::uint8_t operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  const BinaryMatrix& values() const noexcept { return values_; }

  /// Number of positive labels in row i.
  Eigen::Index row_positives(Eigen::Index i) const;
  Eigen::Index positives() const;

 private:
  BinaryMatrix values_;
};

/// N x K matrix of finite scores in [0, 1].
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(Matrix values);

  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }
  const Matrix& values() const noexcept { return values_; }

 private:
  Matrix values_;
};

/// (hamming loss, 1 - LRAP, 1 - micro-F1); every component is minimized.
struct LossVector {
  double l1 = 1.0;
  double l2 = 1.0;
  double l3 = 1.0;

  static constexpr std::size_t size() noexcept { return 3; }
  double operator[](std::size_t i) const noexcept { return i == 0 ? l1 : (i == 1 ? l2 : l3); }
  double& operator[](std::size_t i) noexcept { return i == 0 ? l1 : (i == 1 ? l2 : l3); }

  friend bool operator==(const LossVector&, const LossVector&) = default;
};

/// Entry is 1 iff score >= threshold. threshold must lie in (0, 1).
LabelMatrix binarize(const ScoreMatrix& scores, double threshold = kDefaultThreshold);

double hamming_loss(const LabelMatrix& pred, const LabelMatrix& truth);

/// Label ranking average precision. Ranks are taken over descending score; a
/// label's rank counts every label scoring at least as high. Samples without a
/// positive label are skipped. Throws UndefinedMetric when every sample is skipped.
double lrap(const ScoreMatrix& scores, const LabelMatrix& truth);

/// 2TP / (2TP + FP + FN) pooled over all entries; 1 when nothing is positive anywhere.
double micro_f1(const LabelMatrix& pred, const LabelMatrix& truth);

/// Mean over samples of the per-sample sum of binary cross-entropies.
/// Scores are clipped into [eps, 1 - eps] first.
double bce(const ScoreMatrix& scores, const LabelMatrix& truth, double eps = kBceEpsilon);

LossVector loss_vector(const ScoreMatrix& scores, const LabelMatrix& truth,
                       double threshold = kDefaultThreshold);

double geometric_mean(const LossVector& v);

}  // namespace clml
