#pragma once

#include "clml/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace clml {

enum class FeatureKind { Numeric, Binary };
enum class LabelPosition { Front, Back };

struct Dataset {
  std::string name;
  Matrix x;
  LabelMatrix y;
  std::vector<FeatureKind> feature_kinds;
  std::size_t imputed_values = 0;  // missing entries filled in by the loader

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(y.cols()); }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Rows of a dataset selected by index: features and labels of one split.
struct SplitData {
  Matrix x;
  LabelMatrix y;
  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
};

struct PreparedData {
  SplitData train;
  SplitData validation;
  SplitData test;
};

struct DatasetStats {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t dk = 0;
  double cardinality = 0.0;   // mean positive labels per instance
  double dispersion = 0.0;    // dk / cardinality
  double interaction = 0.0;   // d * cardinality
};

inline constexpr double kTestFraction = 0.30;
inline constexpr double kValidationFraction = 0.20;
inline constexpr std::size_t kMinSplitSamples = 10;

/// Multi-label ARFF (Mulan/MEKA layout), dense or sparse rows. Label
/// attributes must be {0,1} nominals. Two-valued nominal features become
/// binary columns (first declared value -> 0); wider nominals are encoded by
/// declaration index. Missing numeric values take the column mean, missing
/// binary values the column mode; the count lands in imputed_values.
Dataset load_arff(const std::filesystem::path& path, std::size_t label_count,
                  LabelPosition labels_at = LabelPosition::Back);

/// Paired CSV files with equal row counts. A first row containing any
/// non-numeric field is treated as a header.
Dataset load_csv(const std::filesystem::path& features_path,
                 const std::filesystem::path& labels_path);

/// Writes features and labels as two CSV files with header rows.
void write_csv(const Dataset& data, const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path);

/// Dataset manifest JSON:
///   {"name": ..., "arff_path": ..., "label_count": K, "labels_at": "front"|"back"}
/// or {"name": ..., "csv_paths": {"features": ..., "labels": ...}}.
/// ${VAR} in paths expands from the environment; relative paths resolve
/// against the manifest's directory.
struct Manifest {
  std::string name;
  std::filesystem::path arff_path;
  std::filesystem::path features_path;
  std::filesystem::path labels_path;
  std::size_t label_count = 0;
  LabelPosition labels_at = LabelPosition::Back;

  bool is_arff() const noexcept { return !arff_path.empty(); }
};

Manifest read_manifest(const std::filesystem::path& path);
Dataset load_dataset(const Manifest& manifest);

/// Expands ${VAR} references from the environment; unknown variables expand empty.
std::string expand_env(const std::string& text);

/// Iterative stratification: 30% test, then 20% of the remainder validation.
SplitIndices stratified_split(const Dataset& data, std::uint64_t seed);

/// Iterative stratification of `rows` into folds with the given proportions.
std::vector<std::vector<std::size_t>> iterative_stratification(
    const LabelMatrix& labels, const std::vector<std::size_t>& rows,
    const std::vector<double>& proportions, std::uint64_t seed);

/// Min-max scales numeric columns with training-row statistics and clips
/// every row into [0, 1]; constant columns map to 0, binary columns are kept.
Dataset normalize(const Dataset& data, const std::vector<std::size_t>& train_rows);

SplitData select_rows(const Dataset& data, const std::vector<std::size_t>& rows);
PreparedData prepare(const Dataset& data, const SplitIndices& split);

DatasetStats compute_stats(const Dataset& data);

}  // namespace clml
