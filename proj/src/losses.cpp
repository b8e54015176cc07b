#include "clml/losses.hpp"

#include "clml/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace clml {

namespace {

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x"
        << b.cols();
    fail(ErrorKind::Dimension, msg.str());
  }
}

}  // namespace

LabelMatrix::LabelMatrix(BinaryMatrix values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    fail(ErrorKind::Dimension, "label matrix must have at least one row and one column");
  }
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (values_(i, j) > 1) {
        std::ostringstream msg;
        msg << "label matrix entry (" << i << ", " << j << ") is " << int(values_(i, j))
            << ", expected 0 or 1";
        fail(ErrorKind::Config, msg.str());
      }
    }
  }
}

LabelMatrix LabelMatrix::zeros(Eigen::Index rows, Eigen::Index cols) {
  return LabelMatrix(BinaryMatrix::Zero(rows, cols));
}

Eigen::Index LabelMatrix::row_positives(Eigen::Index i) const {
  return values_.row(i).cast<Eigen::Index>().sum();
}

Eigen::Index LabelMatrix::positives() const { return values_.cast<Eigen::Index>().sum(); }

ScoreMatrix::ScoreMatrix(Matrix values) : values_(std::move(values)) {
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      const double v = values_(i, j);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        std::ostringstream msg;
        msg << "score (" << i << ", " << j << ") = " << v << " outside [0, 1]";
        fail(ErrorKind::Numeric, msg.str());
      }
    }
  }
}

LabelMatrix binarize(const ScoreMatrix& scores, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::Config, "binarize: threshold must lie in (0, 1)");
  }
  return LabelMatrix((scores.values().array() >= threshold).cast<std::uint8_t>().matrix());
}

double hamming_loss(const LabelMatrix& pred, const LabelMatrix& truth) {
  require_same_shape(pred, truth, "hamming_loss");
  const auto mismatches = (pred.values().array() != truth.values().array()).count();
  return static_cast<double>(mismatches) / static_cast<double>(pred.rows() * pred.cols());
}

double lrap(const ScoreMatrix& scores, const LabelMatrix& truth) {
  require_same_shape(scores, truth, "lrap");
  const Eigen::Index n = scores.rows();
  const Eigen::Index k = scores.cols();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::vector<double> rank(static_cast<std::size_t>(k));
  std::vector<double> positive_ranks;
  double total = 0.0;
  Eigen::Index counted = 0;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (truth.row_positives(i) == 0) continue;

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return scores(i, a) > scores(i, b); });
    // Every label in a tied run takes the run's last 1-based position.
    for (std::size_t lo = 0; lo < order.size();) {
      std::size_t hi = lo + 1;
      while (hi < order.size() && scores(i, order[hi]) == scores(i, order[lo])) ++hi;
      for (std::size_t p = lo; p < hi; ++p) rank[static_cast<std::size_t>(order[p])] = static_cast<double>(hi);
      lo = hi;
    }

    positive_ranks.clear();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (truth(i, j)) positive_ranks.push_back(rank[static_cast<std::size_t>(j)]);
    }
    std::sort(positive_ranks.begin(), positive_ranks.end());
    double sample = 0.0;
    for (double r : positive_ranks) {
      const auto at_or_above =
          std::upper_bound(positive_ranks.begin(), positive_ranks.end(), r) - positive_ranks.begin();
      sample += static_cast<double>(at_or_above) / r;
    }
    total += sample / static_cast<double>(positive_ranks.size());
    ++counted;
  }

  if (counted == 0) fail(ErrorKind::UndefinedMetric, "lrap: no sample has a positive label");
  return total / static_cast<double>(counted);
}

double micro_f1(const LabelMatrix& pred, const LabelMatrix& truth) {
  require_same_shape(pred, truth, "micro_f1");
  const auto p = pred.values().array();
  const auto t = truth.values().array();
  const auto tp = ((p == 1) && (t == 1)).count();
  const auto fp = ((p == 1) && (t == 0)).count();
  const auto fn = ((p == 0) && (t == 1)).count();
  const auto denom = 2 * tp + fp + fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double bce(const ScoreMatrix& scores, const LabelMatrix& truth, double eps) {
  require_same_shape(scores, truth, "bce");
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      const double p = std::clamp(scores(i, j), eps, 1.0 - eps);
      total -= truth(i, j) ? std::log(p) : std::log1p(-p);
    }
  }
  return total / static_cast<double>(scores.rows());
}

LossVector loss_vector(const ScoreMatrix& scores, const LabelMatrix& truth, double threshold) {
  const LabelMatrix pred = binarize(scores, threshold);
  return {hamming_loss(pred, truth), 1.0 - lrap(scores, truth), 1.0 - micro_f1(pred, truth)};
}

double geometric_mean(const LossVector& v) { return std::cbrt(v.l1 * v.l2 * v.l3); }

}  // namespace clml
