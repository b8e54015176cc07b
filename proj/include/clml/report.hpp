#pragma once

#include "clml/losses.hpp"
#include "clml/pareto.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clml {

struct ResultRow {
  std::string dataset;
  std::string method;
  LossVector loss;
};

/// (dataset, method, losses) rows. Datasets and methods keep the order of
/// their first appearance.
class ResultsTable {
 public:
  ResultsTable() = default;
  /// Rejects duplicate (dataset, method) pairs and losses outside [0, 1] with Config errors.
  explicit ResultsTable(std::vector<ResultRow> rows);

  const std::vector<ResultRow>& rows() const noexcept { return rows_; }
  const std::vector<std::string>& datasets() const noexcept { return datasets_; }
  const std::vector<std::string>& methods() const noexcept { return methods_; }
  const LossVector* find(const std::string& dataset, const std::string& method) const;

  /// Throws IncompleteGrid naming every missing (dataset, method) cell.
  void require_full_grid() const;

 private:
  std::vector<ResultRow> rows_;
  std::vector<std::string> datasets_;
  std::vector<std::string> methods_;
};

/// CSV with a header naming at least dataset, method, l1, l2, l3 (any order;
/// other columns are ignored). Malformed rows raise Parse errors with line numbers.
ResultsTable load_results(const std::filesystem::path& path);

/// Midpoint convention for even counts. Empty input -> Config error.
double median(std::vector<double> values);

struct GeometricTable {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  Matrix values;     // datasets x methods
  Vector medians;    // per method, over datasets
};

GeometricTable geometric_table(const ResultsTable& table);

struct ContributionRow {
  std::string dataset;
  std::string method;
  double contribution = 0.0;
  double normalized = 0.0;  // contribution / per-dataset sum; 0 when the sum is 0
};

/// Exact contribution of every method's triple within its dataset's set of triples.
std::vector<ContributionRow> contribution_table(const ResultsTable& table,
                                                const LossVector& ref = kUnitReference);

/// Ascending ranks (smallest value -> 1); tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

/// values: blocks x treatments. Each block's row is ranked across treatments;
/// chi2 = 12 B / (k (k + 1)) * sum_j (mean_rank_j - (k + 1) / 2)^2, no tie correction.
struct FriedmanResult {
  double statistic = 0.0;
  std::size_t treatments = 0;
  std::size_t blocks = 0;
  Vector mean_ranks;       // per treatment
  double critical_value = 0.0;  // chi-square quantile at 1 - alpha with treatments - 1 df
};

FriedmanResult friedman(const Matrix& values, double alpha = 0.05);

/// Bonferroni-Dunn: z_{1 - alpha / (2 (k - 1))} * sqrt(k (k + 1) / (6 T)).
double critical_difference(std::size_t k, std::size_t t, double alpha = 0.05);

/// Standard normal quantile; |error| below 1e-12 on (0, 1).
double normal_quantile(double p);

/// Chi-square quantile with `df` degrees of freedom.
double chi_square_quantile(double p, double df);

/// Which loss column a rank statistic is computed over.
enum class Criterion { L1, L2, L3, GeometricMean };
std::string criterion_name(Criterion c);

/// Datasets x methods matrix of one criterion.
Matrix criterion_matrix(const ResultsTable& table, Criterion c);

struct RankSummary {
  Criterion criterion = Criterion::L1;
  std::vector<std::string> methods;
  Vector mean_ranks;        // methods ranked within each dataset
  FriedmanResult by_method;   // methods as treatments, datasets as blocks
  FriedmanResult by_dataset;  // datasets as treatments, methods as blocks
  double cd = 0.0;
};

/// Needs a full grid with at least two methods and two datasets (Config error otherwise).
RankSummary rank_summary(const ResultsTable& table, Criterion c, double alpha = 0.05);

inline constexpr std::size_t kDistributionBins = 50;
inline constexpr std::size_t kCalibrationBins = 10;

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_score = 0.0;  // meaningful only when count > 0
  double positive_rate = 0.0;
};

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
};

struct CalibrationData {
  std::vector<HistogramBin> distribution;
  std::vector<CalibrationBin> calibration;
};

/// Equal-width bins over [0, 1], the last closed. An entry is correct when
/// its binarized score equals the truth.
CalibrationData calibration_export(const ScoreMatrix& scores, const LabelMatrix& truth,
                                   std::size_t distribution_bins = kDistributionBins,
                                   std::size_t calibration_bins = kCalibrationBins,
                                   double threshold = kDefaultThreshold);

void write_distribution_csv(const CalibrationData& data, const std::filesystem::path& path);
void write_calibration_csv(const CalibrationData& data, const std::filesystem::path& path);

}  // namespace clml
