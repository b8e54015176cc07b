#pragma once

#include "clml/losses.hpp"
#include "clml/pareto.hpp"

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>

namespace test_support {

inline const std::filesystem::path kSourceDir = CLML_SOURCE_DIR;

inline clml::LabelMatrix labels(std::initializer_list<std::initializer_list<int>> rows) {
  clml::BinaryMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (int v : r) m(i, j++) = static_cast<std::uint8_t>(v);
    ++i;
  }
  return clml::LabelMatrix(m);
}

inline clml::ScoreMatrix scores(std::initializer_list<std::initializer_list<double>> rows) {
  clml::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return clml::ScoreMatrix(m);
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("clml_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace test_support

#include <fstream>
#include <sstream>
#include <vector>

namespace test_support {

/// One row of the shipped published-tables fixture.
struct PublishedRow {
  std::string dataset;
  std::string method;
  clml::LossVector loss;
  double hv_contribution = 0.0;
  double normalized = 0.0;
  double geometric_mean = 0.0;
};

inline std::vector<PublishedRow> published_rows() {
  std::ifstream in(kSourceDir / "tests" / "fixtures" / "published_tables.csv");
  std::string line;
  std::getline(in, line);
  std::vector<PublishedRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    PublishedRow r;
    r.dataset = f.at(0);
    r.method = f.at(1);
    r.loss = {std::stod(f.at(2)), std::stod(f.at(3)), std::stod(f.at(4))};
    r.hv_contribution = std::stod(f.at(5));
    r.normalized = std::stod(f.at(6));
    r.geometric_mean = std::stod(f.at(7));
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<clml::TaggedPoint> dataset_points(const std::vector<PublishedRow>& rows,
                                                     const std::string& dataset) {
  std::vector<clml::TaggedPoint> out;
  for (const auto& r : rows) {
    if (r.dataset == dataset) out.push_back({r.loss, r.method});
  }
  return out;
}

/// Random loss vectors on the grid {1/g, ..., (g-1)/g}^3.
inline std::vector<clml::LossVector> snapped_front(std::mt19937_64& rng, std::size_t n, int g) {
  std::uniform_int_distribution<int> cell(1, g - 1);
  std::vector<clml::LossVector> pts(n);
  for (auto& p : pts) p = {cell(rng) / double(g), cell(rng) / double(g), cell(rng) / double(g)};
  return pts;
}

/// Rasterized ordered partition w.r.t. ref (1,1,1): every cell of a g^3 grid
/// is credited to the first point weakly dominating its centre. Exact for
/// points snapped to multiples of 1/g.
inline std::vector<double> grid_partition(const std::vector<clml::LossVector>& pts, int g) {
  std::vector<double> credit(pts.size(), 0.0);
  const double cell = 1.0 / (double(g) * g * g);
  std::vector<std::size_t> covering;
  for (int i = 0; i < g; ++i) {
    const double x = (i + 0.5) / g;
    for (int j = 0; j < g; ++j) {
      const double y = (j + 0.5) / g;
      covering.clear();
      for (std::size_t p = 0; p < pts.size(); ++p) {
        if (pts[p].l1 <= x && pts[p].l2 <= y) covering.push_back(p);
      }
      if (covering.empty()) continue;
      for (int k = 0; k < g; ++k) {
        const double z = (k + 0.5) / g;
        for (std::size_t p : covering) {
          if (pts[p].l3 <= z) {
            credit[p] += cell;
            break;
          }
        }
      }
    }
  }
  return credit;
}

}  // namespace test_support
