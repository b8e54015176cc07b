#include "clml/data.hpp"
#include "clml/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using namespace clml;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

Dataset random_dataset(std::size_t n, std::size_t d, std::size_t k, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset ds;
  ds.name = "random";
  ds.x = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  BinaryMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) ds.x(i, j) = 10.0 * u(rng) - 3.0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) = u(rng) < p ? 1 : 0;
  }
  ds.y = LabelMatrix(y);
  ds.feature_kinds.assign(d, FeatureKind::Numeric);
  return ds;
}

void check_partition(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all;
  all.insert(all.end(), s.train.begin(), s.train.end());
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(n);
  std::iota(expected.begin(), expected.end(), std::size_t{0});
  REQUIRE(all == expected);
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("ARFF toy file with one label") {
  const auto dir = test_support::scratch_dir("arff_toy");
  write_file(dir / "toy.arff",
             "% comment\n@relation toy\n@attribute a numeric\n@attribute 'b c' {no,yes}\n"
             "@attribute y {0,1}\n@data\n1.5,no,1\n2.5,yes,0\n?,yes,1\n");
  const Dataset ds = load_arff(dir / "toy.arff", 1);
  CHECK(ds.n() == 3);
  CHECK(ds.d() == 2);
  CHECK(ds.k() == 1);
  CHECK(ds.feature_kinds[1] == FeatureKind::Binary);
  CHECK(ds.x(1, 1) == 1.0);
  CHECK(ds.x(2, 0) == doctest::Approx(2.0));
  CHECK(ds.imputed_values == 1);
  CHECK(ds.y(0, 0) == 1);
  CHECK(ds.y(1, 0) == 0);
}

TEST_CASE("ARFF labels at the front and sparse rows") {
  const auto dir = test_support::scratch_dir("arff_sparse");
  write_file(dir / "s.arff",
             "@relation s\n@attribute l0 {0,1}\n@attribute l1 {0,1}\n@attribute f0 numeric\n"
             "@attribute f1 numeric\n@data\n{0 1, 3 4.5}\n{1 1, 2 2}\n");
  const Dataset ds = load_arff(dir / "s.arff", 2, LabelPosition::Front);
  CHECK(ds.d() == 2);
  CHECK(ds.k() == 2);
  CHECK(ds.y(0, 0) == 1);
  CHECK(ds.y(0, 1) == 0);
  CHECK(ds.x(0, 1) == 4.5);
  CHECK(ds.x(1, 0) == 2.0);
  CHECK(ds.x(0, 0) == 0.0);
}

TEST_CASE("ARFF errors name the attribute or line") {
  const auto dir = test_support::scratch_dir("arff_errors");
  write_file(dir / "bad_label.arff",
             "@relation t\n@attribute a numeric\n@attribute y {0,1}\n@data\n1,2\n");
  const auto msg = message_of([&] { load_arff(dir / "bad_label.arff", 1); });
  CHECK(msg.find("'y'") != std::string::npos);

  write_file(dir / "bad_decl.arff", "@relation t\n@attribute a numeric\n@attribute y {0,2}\n@data\n1,0\n");
  CHECK(kind_of([&] { load_arff(dir / "bad_decl.arff", 1); }) == ErrorKind::Parse);

  write_file(dir / "bad_type.arff", "@relation t\n@attribute a blob\n@attribute y {0,1}\n@data\n1,0\n");
  CHECK(message_of([&] { load_arff(dir / "bad_type.arff", 1); }).find("bad_type.arff:2:") != std::string::npos);

  write_file(dir / "few.arff", "@relation t\n@attribute y {0,1}\n@data\n1\n");
  CHECK(kind_of([&] { load_arff(dir / "few.arff", 3); }) == ErrorKind::Parse);
  CHECK(kind_of([&] { load_arff(dir / "missing.arff", 1); }) == ErrorKind::Io);
}

TEST_CASE("CSV pair loads with and without headers") {
  const auto dir = test_support::scratch_dir("csv");
  write_file(dir / "x.csv", "a,b\n1,2\n3,4\n");
  write_file(dir / "y.csv", "1\n0\n");
  const Dataset ds = load_csv(dir / "x.csv", dir / "y.csv");
  CHECK(ds.n() == 2);
  CHECK(ds.d() == 2);
  CHECK(ds.k() == 1);
  CHECK(ds.x(1, 0) == 3.0);
}

TEST_CASE("CSV errors") {
  const auto dir = test_support::scratch_dir("csv_errors");
  write_file(dir / "x.csv", "1,2\n3,4\n5,6\n");
  write_file(dir / "y.csv", "1\n0\n");
  const auto msg = message_of([&] { load_csv(dir / "x.csv", dir / "y.csv"); });
  CHECK(msg.find('3') != std::string::npos);
  CHECK(msg.find('2') != std::string::npos);

  write_file(dir / "ragged.csv", "1,2\n3\n");
  write_file(dir / "y2.csv", "1\n0\n");
  CHECK(kind_of([&] { load_csv(dir / "ragged.csv", dir / "y2.csv"); }) == ErrorKind::Parse);

  write_file(dir / "x2.csv", "1,2\n3,4\n");
  write_file(dir / "ybad.csv", "1\n2\n");
  CHECK(kind_of([&] { load_csv(dir / "x2.csv", dir / "ybad.csv"); }) == ErrorKind::Parse);

  write_file(dir / "hx.csv", "a,b\n");
  write_file(dir / "hy.csv", "y\n");
  CHECK(message_of([&] { load_csv(dir / "hx.csv", dir / "hy.csv"); }).find("empty") != std::string::npos);
}

TEST_CASE("CSV write then read reproduces the matrices") {
  const auto dir = test_support::scratch_dir("roundtrip");
  const Dataset ds = random_dataset(20, 4, 3, 0.4, 1);
  write_csv(ds, dir / "x.csv", dir / "y.csv");
  const Dataset back = load_csv(dir / "x.csv", dir / "y.csv");
  CHECK(back.x == ds.x);
  CHECK(back.y.values() == ds.y.values());
}

TEST_CASE("manifests resolve relative paths and environment variables") {
  const auto dir = test_support::scratch_dir("manifest");
  write_file(dir / "x.csv", "1,2\n3,4\n");
  write_file(dir / "y.csv", "1\n0\n");
  ::setenv("CLML_TEST_LABELS", "y.csv", 1);
  write_file(dir / "m.json",
             R"({"name":"m","csv_paths":{"features":"x.csv","labels":"${CLML_TEST_LABELS}"}})");
  const Manifest m = read_manifest(dir / "m.json");
  CHECK(m.features_path == dir / "x.csv");
  CHECK(m.labels_path == dir / "y.csv");
  CHECK(load_dataset(m).n() == 2);

  write_file(dir / "bad.json", "{\"name\": 1");
  CHECK(kind_of([&] { read_manifest(dir / "bad.json"); }) == ErrorKind::Parse);
  CHECK(kind_of([&] { read_manifest(dir / "none.json"); }) == ErrorKind::Io);
  CHECK(expand_env("a${CLML_TEST_LABELS}b") == "ay.csvb");
  CHECK(expand_env("${CLML_TEST_UNSET_VARIABLE}") == "");
}

TEST_CASE("the shipped toy copy task loads") {
  const Manifest m = read_manifest(test_support::kSourceDir / "data" / "toy" / "manifest.json");
  const Dataset ds = load_dataset(m);
  CHECK(ds.n() == 64);
  CHECK(ds.d() == 4);
  CHECK(ds.k() == 2);
  for (Eigen::Index i = 0; i < 64; ++i) {
    CHECK(ds.y(i, 0) == ds.x(i, 0));
    CHECK(ds.y(i, 1) == ds.x(i, 1));
  }
}

TEST_CASE("normalize uses training statistics and clips") {
  Dataset ds;
  ds.x = Matrix(4, 3);
  ds.x << 0, 7, 1,
          5, 7, 0,
          10, 7, 1,
          20, 7, 0;
  BinaryMatrix y = BinaryMatrix::Zero(4, 1);
  ds.y = LabelMatrix(y);
  ds.feature_kinds = {FeatureKind::Numeric, FeatureKind::Numeric, FeatureKind::Binary};
  const Dataset n = normalize(ds, {0, 1, 2});
  CHECK(n.x(0, 0) == 0.0);
  CHECK(n.x(1, 0) == 0.5);
  CHECK(n.x(2, 0) == 1.0);
  CHECK(n.x(3, 0) == 1.0);
  CHECK(n.x.col(1).isZero());
  CHECK(n.x.col(2) == ds.x.col(2));

  const Dataset r = random_dataset(30, 3, 2, 0.5, 2);
  std::vector<std::size_t> all(30);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Dataset once = normalize(r, all);
  CHECK((normalize(once, all).x - once.x).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("stratified split is disjoint, exhaustive and deterministic") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = random_dataset(50 + seed, 2, 4, 0.3, seed);
    const SplitIndices s = stratified_split(ds, seed);
    check_partition(s, ds.n());
    const double n = static_cast<double>(ds.n());
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.3 * n) <= 2.0);
    const double rest = n - static_cast<double>(s.test.size());
    CHECK(std::abs(static_cast<double>(s.validation.size()) - 0.2 * rest) <= 2.0);
    const SplitIndices again = stratified_split(ds, seed);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
  }
  const Dataset tiny = random_dataset(9, 2, 2, 0.5, 1);
  CHECK(kind_of([&] { stratified_split(tiny, 0); }) == ErrorKind::Config);
}

TEST_CASE("a label seen ten times sends three of them to the test split") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Dataset ds = random_dataset(40, 2, 1, 0.0, seed);
    BinaryMatrix y = BinaryMatrix::Zero(40, 1);
    for (int i = 0; i < 10; ++i) y(i * 4, 0) = 1;
    ds.y = LabelMatrix(y);
    const SplitIndices s = stratified_split(ds, seed);
    int in_test = 0;
    for (std::size_t i : s.test) in_test += y(static_cast<Eigen::Index>(i), 0);
    CHECK(in_test >= 2);
    CHECK(in_test <= 4);
  }
}

TEST_CASE("single-label balanced splits keep the class ratio within two percent") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Dataset ds = random_dataset(200, 2, 1, 0.0, seed);
    BinaryMatrix y(200, 1);
    for (int i = 0; i < 200; ++i) y(i, 0) = i % 2;
    ds.y = LabelMatrix(y);
    const SplitIndices s = stratified_split(ds, seed);
    for (const auto* part : {&s.train, &s.validation, &s.test}) {
      double pos = 0;
      for (std::size_t i : *part) pos += y(static_cast<Eigen::Index>(i), 0);
      REQUIRE(std::abs(pos / static_cast<double>(part->size()) - 0.5) <= 0.02 + 0.5 / part->size());
    }
  }
}

TEST_CASE("dataset statistics") {
  Dataset ds = random_dataset(4, 3, 3, 0.0, 1);
  BinaryMatrix y(4, 3);
  y << 1, 1, 0,
       0, 1, 0,
       1, 1, 1,
       0, 0, 1;
  ds.y = LabelMatrix(y);
  const DatasetStats st = compute_stats(ds);
  CHECK(st.n == 4);
  CHECK(st.dk == 9);
  CHECK(st.cardinality == doctest::Approx(1.75));
  CHECK(st.dispersion == doctest::Approx(9.0 / 1.75));
  CHECK(st.interaction == doctest::Approx(3 * 1.75));
  CHECK(st.dispersion * st.cardinality == doctest::Approx(st.dk));

  BinaryMatrix one = BinaryMatrix::Zero(4, 3);
  for (int i = 0; i < 4; ++i) one(i, i % 3) = 1;
  ds.y = LabelMatrix(one);
  const DatasetStats single = compute_stats(ds);
  CHECK(single.cardinality == 1.0);
  CHECK(single.dispersion == 9.0);
}

TEST_CASE("prepare selects the split rows") {
  const Dataset ds = random_dataset(30, 3, 2, 0.5, 4);
  const SplitIndices s = stratified_split(ds, 4);
  const PreparedData p = prepare(ds, s);
  CHECK(p.train.n() == s.train.size());
  CHECK(p.validation.n() == s.validation.size());
  CHECK(p.test.n() == s.test.size());
  CHECK(p.train.x.minCoeff() >= 0.0);
  CHECK(p.test.x.maxCoeff() <= 1.0);
}

}  // TEST_SUITE
