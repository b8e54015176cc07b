#include "clml/report.hpp"

#include "clml/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

namespace clml {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

ResultsTable::ResultsTable(std::vector<ResultRow> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (!(r.loss[j] >= 0.0 && r.loss[j] <= 1.0)) {
        fail(ErrorKind::Config, "loss of " + r.dataset + "/" + r.method + " outside [0, 1]");
      }
    }
    if (find(r.dataset, r.method) != &r.loss) {
      fail(ErrorKind::Config, "duplicate results row " + r.dataset + "/" + r.method);
    }
    if (std::find(datasets_.begin(), datasets_.end(), r.dataset) == datasets_.end()) datasets_.push_back(r.dataset);
    if (std::find(methods_.begin(), methods_.end(), r.method) == methods_.end()) methods_.push_back(r.method);
  }
}

const LossVector* ResultsTable::find(const std::string& dataset, const std::string& method) const {
  for (const auto& r : rows_) {
    if (r.dataset == dataset && r.method == method) return &r.loss;
  }
  return nullptr;
}

void ResultsTable::require_full_grid() const {
  std::string missing;
  std::size_t count = 0;
  for (const auto& d : datasets_) {
    for (const auto& m : methods_) {
      if (find(d, m)) continue;
      missing += (count++ ? ", " : "") + d + "/" + m;
    }
  }
  if (count) fail(ErrorKind::IncompleteGrid, "results grid is missing " + std::to_string(count) + " cell(s): " + missing);
}

ResultsTable load_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open results file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split_csv(trim(line));
  }
  if (header.empty()) fail(ErrorKind::Parse, path.string() + ": empty results file");

  const char* wanted[] = {"dataset", "method", "l1", "l2", "l3"};
  std::size_t column[5];
  for (std::size_t w = 0; w < 5; ++w) {
    const auto it = std::find(header.begin(), header.end(), wanted[w]);
    if (it == header.end()) fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": header lacks column '" + wanted[w] + "'");
    column[w] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(trim(line));
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      fail(ErrorKind::Parse, where + "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    ResultRow row;
    row.dataset = fields[column[0]];
    row.method = fields[column[1]];
    if (row.dataset.empty() || row.method.empty()) fail(ErrorKind::Parse, where + "empty dataset or method name");
    for (std::size_t j = 0; j < 3; ++j) {
      const std::string& cell = fields[column[2 + j]];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size()) fail(ErrorKind::Parse, where + "'" + cell + "' is not a number");
      row.loss[j] = v;
    }
    rows.push_back(std::move(row));
  }
  try {
    return ResultsTable(std::move(rows));
  } catch (const Error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::Config, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

GeometricTable geometric_table(const ResultsTable& table) {
  table.require_full_grid();
  GeometricTable g;
  g.datasets = table.datasets();
  g.methods = table.methods();
  const auto t = static_cast<Eigen::Index>(g.datasets.size());
  const auto k = static_cast<Eigen::Index>(g.methods.size());
  g.values = Matrix(t, k);
  g.medians = Vector(k);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      g.values(i, j) = geometric_mean(*table.find(g.datasets[static_cast<std::size_t>(i)], g.methods[static_cast<std::size_t>(j)]));
    }
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    g.medians(j) = median(std::vector<double>(g.values.col(j).begin(), g.values.col(j).end()));
  }
  return g;
}

std::vector<ContributionRow> contribution_table(const ResultsTable& table, const LossVector& ref) {
  std::vector<ContributionRow> out;
  const LossVector refs[] = {ref};
  for (const auto& d : table.datasets()) {
    std::vector<LossVector> points;
    std::vector<std::string> methods;
    for (const auto& r : table.rows()) {
      if (r.dataset != d) continue;
      points.push_back(r.loss);
      methods.push_back(r.method);
    }
    const std::size_t first = out.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double c = exact_contribution_at(points, i, refs);
      sum += c;
      out.push_back({d, methods[i], c, 0.0});
    }
    if (sum > 0.0) {
      for (std::size_t i = first; i < out.size(); ++i) out[i].normalized = out[i].contribution / sum;
    }
  }
  return out;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && values[order[hi]] == values[order[lo]]) ++hi;
    const double avg = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t p = lo; p < hi; ++p) ranks[order[p]] = avg;
    lo = hi;
  }
  return ranks;
}

FriedmanResult friedman(const Matrix& values, double alpha) {
  const auto blocks = values.rows();
  const auto k = values.cols();
  if (k < 2) fail(ErrorKind::Config, "rank statistics need at least two treatments, got " + std::to_string(k));
  if (blocks < 1) fail(ErrorKind::Config, "rank statistics need at least one block");
  FriedmanResult r;
  r.treatments = static_cast<std::size_t>(k);
  r.blocks = static_cast<std::size_t>(blocks);
  r.mean_ranks = Vector::Zero(k);
  std::vector<double> row(static_cast<std::size_t>(k));
  for (Eigen::Index b = 0; b < blocks; ++b) {
    for (Eigen::Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = values(b, j);
    const auto ranks = midranks(row);
    for (Eigen::Index j = 0; j < k; ++j) r.mean_ranks(j) += ranks[static_cast<std::size_t>(j)];
  }
  r.mean_ranks /= static_cast<double>(blocks);
  const double kk = static_cast<double>(k);
  const double centre = (kk + 1.0) / 2.0;
  r.statistic = 12.0 * static_cast<double>(blocks) / (kk * (kk + 1.0)) *
                (r.mean_ranks.array() - centre).square().sum();
  r.critical_value = chi_square_quantile(1.0 - alpha, kk - 1.0);
  return r;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::Config, "normal quantile needs p in (0, 1)");
  // Acklam's rational approximation, then one Halley step on the erfc residual.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x = 0.0;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

double chi_square_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0) || !(df > 0.0)) fail(ErrorKind::Config, "chi-square quantile needs p in (0, 1) and df > 0");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), p);
}

double critical_difference(std::size_t k, std::size_t t, double alpha) {
  if (k < 2 || t < 2) fail(ErrorKind::Config, "critical difference needs k >= 2 methods and T >= 2 datasets");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Config, "alpha must lie in (0, 1)");
  const double kk = static_cast<double>(k);
  const double z = normal_quantile(1.0 - alpha / (2.0 * (kk - 1.0)));
  return z * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(t)));
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::L1: return "l1";
    case Criterion::L2: return "l2";
    case Criterion::L3: return "l3";
    case Criterion::GeometricMean: return "geometric_mean";
  }
  return "unknown";
}

Matrix criterion_matrix(const ResultsTable& table, Criterion c) {
  table.require_full_grid();
  const auto& ds = table.datasets();
  const auto& ms = table.methods();
  Matrix m(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ms.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ms.size(); ++j) {
      const LossVector& v = *table.find(ds[i], ms[j]);
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          c == Criterion::GeometricMean ? geometric_mean(v) : v[static_cast<std::size_t>(c)];
    }
  }
  return m;
}

RankSummary rank_summary(const ResultsTable& table, Criterion c, double alpha) {
  const Matrix m = criterion_matrix(table, c);
  if (m.cols() < 2) fail(ErrorKind::Config, "rank statistics need at least two methods, table has " + std::to_string(m.cols()));
  if (m.rows() < 2) fail(ErrorKind::Config, "rank statistics need at least two datasets, table has " + std::to_string(m.rows()));
  RankSummary s;
  s.criterion = c;
  s.methods = table.methods();
  s.by_method = friedman(m, alpha);
  s.by_dataset = friedman(m.transpose(), alpha);
  s.mean_ranks = s.by_method.mean_ranks;
  s.cd = critical_difference(static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.rows()), alpha);
  return s;
}

CalibrationData calibration_export(const ScoreMatrix& scores, const LabelMatrix& truth,
                                   std::size_t distribution_bins, std::size_t calibration_bins,
                                   double threshold) {
  if (distribution_bins < 1 || calibration_bins < 1) fail(ErrorKind::Config, "bin counts must be >= 1");
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols()) {
    fail(ErrorKind::Dimension, "calibration_export: score and label shapes differ");
  }
  auto bin_of = [](double s, std::size_t bins) {
    return std::min(static_cast<std::size_t>(s * static_cast<double>(bins)), bins - 1);
  };
  CalibrationData out;
  out.distribution.resize(distribution_bins);
  for (std::size_t b = 0; b < distribution_bins; ++b) {
    out.distribution[b].lower = static_cast<double>(b) / static_cast<double>(distribution_bins);
    out.distribution[b].upper = static_cast<double>(b + 1) / static_cast<double>(distribution_bins);
  }
  out.calibration.resize(calibration_bins);
  std::vector<double> score_sum(calibration_bins, 0.0);
  std::vector<std::size_t> positives(calibration_bins, 0);
  for (std::size_t b = 0; b < calibration_bins; ++b) {
    out.calibration[b].lower = static_cast<double>(b) / static_cast<double>(calibration_bins);
    out.calibration[b].upper = static_cast<double>(b + 1) / static_cast<double>(calibration_bins);
  }
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      const double s = scores(i, j);
      const bool positive = truth(i, j) != 0;
      const bool correct = (s >= threshold) == positive;
      auto& h = out.distribution[bin_of(s, distribution_bins)];
      (correct ? h.correct : h.incorrect) += 1;
      const std::size_t b = bin_of(s, calibration_bins);
      ++out.calibration[b].count;
      score_sum[b] += s;
      positives[b] += positive ? 1 : 0;
    }
  }
  for (std::size_t b = 0; b < calibration_bins; ++b) {
    auto& c = out.calibration[b];
    if (c.count == 0) continue;
    c.mean_score = score_sum[b] / static_cast<double>(c.count);
    c.positive_rate = static_cast<double>(positives[b]) / static_cast<double>(c.count);
  }
  return out;
}

void write_distribution_csv(const CalibrationData& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << "lower,upper,correct,incorrect\n";
  out.precision(17);
  for (const auto& h : data.distribution) out << h.lower << ',' << h.upper << ',' << h.correct << ',' << h.incorrect << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

void write_calibration_csv(const CalibrationData& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << "lower,upper,count,mean_score,positive_rate\n";
  out.precision(17);
  for (const auto& c : data.calibration) {
    out << c.lower << ',' << c.upper << ',' << c.count << ',';
    if (c.count) out << c.mean_score << ',' << c.positive_rate;
    else out << ',';
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

}  // namespace clml
