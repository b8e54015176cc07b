#include "clml/error.hpp"
#include "clml/pareto.hpp"
#include "doctest.h"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace clml;

namespace {

std::vector<LossVector> random_points(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LossVector> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

std::vector<TaggedPoint> tagged(const std::vector<LossVector>& pts) {
  std::vector<TaggedPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) out.push_back({pts[i], "p" + std::to_string(i)});
  return out;
}

}  // namespace

TEST_SUITE("pareto") {

TEST_CASE("dominance on the basic examples") {
  CHECK(dominates({0.1, 0.2, 0.3}, {0.2, 0.2, 0.3}));
  CHECK_FALSE(dominates({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}));
  CHECK_FALSE(dominates({0.1, 0.9, 0.3}, {0.2, 0.2, 0.3}));
  CHECK_FALSE(dominates({0.2, 0.2, 0.3}, {0.1, 0.9, 0.3}));
  CHECK(weakly_dominates({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}));
}

TEST_CASE("dominance is irreflexive, asymmetric and transitive on random points") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> level(0, 3);
  auto draw = [&] { return LossVector{level(rng) / 3.0, level(rng) / 3.0, level(rng) / 3.0}; };
  for (int t = 0; t < 2000; ++t) {
    const auto a = draw(), b = draw(), c = draw();
    REQUIRE_FALSE(dominates(a, a));
    if (dominates(a, b)) REQUIRE_FALSE(dominates(b, a));
    if (dominates(a, b) && dominates(b, c)) REQUIRE(dominates(a, c));
  }
}

TEST_CASE("nondominated filter keeps exactly the non-dominated points") {
  CHECK(nondominated_filter(std::vector<TaggedPoint>{}).empty());
  const std::vector<TaggedPoint> one{{{0.3, 0.3, 0.3}, "a"}};
  CHECK(nondominated_filter(one).size() == 1);

  const std::vector<TaggedPoint> chain{
      {{0.1, 0.1, 0.1}, "a"}, {{0.2, 0.2, 0.2}, "b"}, {{0.3, 0.3, 0.3}, "c"}};
  const auto f = nondominated_filter(chain);
  REQUIRE(f.size() == 1);
  CHECK(f[0].tag == "a");

  const std::vector<TaggedPoint> dup{{{0.1, 0.5, 0.1}, "x"}, {{0.1, 0.5, 0.1}, "y"}};
  const auto d = nondominated_filter(dup);
  REQUIRE(d.size() == 1);
  CHECK(d[0].tag == "x");
}

TEST_CASE("nondominated filter leaves DELA and CLML on emotions") {
  const auto rows = test_support::published_rows();
  const auto pts = test_support::dataset_points(rows, "emotions");
  REQUIRE(pts.size() == 7);
  const auto f = nondominated_filter(pts);
  std::vector<std::string> tags;
  for (const auto& p : f.points()) tags.push_back(p.tag);
  std::sort(tags.begin(), tags.end());
  CHECK(tags == std::vector<std::string>{"CLML", "DELA"});
}

TEST_CASE("reference set update") {
  const std::vector<TaggedPoint> unit{{kUnitReference, "ref"}};
  const Front r0 = nondominated_filter(unit);
  const std::vector<TaggedPoint> p{{{0.4, 0.5, 0.6}, "p"}};
  const Front r1 = update_reference_set(r0, p);
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].tag == "p");

  CHECK(update_reference_set(r1, std::vector<TaggedPoint>{}).size() == 1);

  const std::vector<TaggedPoint> q{{{0.6, 0.4, 0.6}, "q"}};
  CHECK(update_reference_set(r1, q).size() == 2);
}

TEST_CASE("exact hypervolume on hand-computed fronts") {
  const std::vector<LossVector> single{{0.5, 0.5, 0.5}};
  CHECK(exact_hypervolume(single) == doctest::Approx(0.125));
  const std::vector<LossVector> two{{0.2, 0.8, 0.5}, {0.8, 0.2, 0.5}};
  CHECK(exact_hypervolume(two) == doctest::Approx(0.14));
  CHECK(exact_hypervolume(std::vector<LossVector>{}) == 0.0);
  CHECK(hypervolume_sweep(two, std::vector<LossVector>{kUnitReference}) == doctest::Approx(0.14));
}

TEST_CASE("inclusion-exclusion and sweep agree on random fronts") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> size(1, 12);
  const std::vector<LossVector> unit{kUnitReference};
  for (int t = 0; t < 1000; ++t) {
    const auto pts = random_points(rng, size(rng));
    const double ie = hypervolume_inclusion_exclusion(pts, unit);
    const double sw = hypervolume_sweep(pts, unit);
    REQUIRE(std::abs(ie - sw) <= 1e-12);
  }
}

TEST_CASE("inclusion-exclusion and sweep agree with several reference vectors") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  for (int t = 0; t < 500; ++t) {
    const auto pts = random_points(rng, size(rng));
    const auto refs = random_points(rng, size(rng));
    REQUIRE(std::abs(hypervolume_inclusion_exclusion(pts, refs) - hypervolume_sweep(pts, refs)) <= 1e-12);
  }
}

TEST_CASE("hypervolume is monotone under adding points") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 300; ++t) {
    auto pts = random_points(rng, 6);
    const double before = exact_hypervolume(std::span<const LossVector>(pts.data(), 5));
    REQUIRE(exact_hypervolume(pts) >= before - 1e-15);
  }
}

TEST_CASE("hypervolume matches the grid rasterization on snapped fronts") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    const auto pts = test_support::snapped_front(rng, 6, 200);
    const auto grid = test_support::grid_partition(pts, 200);
    const double total = std::accumulate(grid.begin(), grid.end(), 0.0);
    CHECK(exact_hypervolume(pts) == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("partition credits match the grid oracle and sum to the total") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 5; ++t) {
    const auto pts = test_support::snapped_front(rng, 7, 200);
    const auto grid = test_support::grid_partition(pts, 200);
    const auto hv = partition_hypervolume(tagged(pts));
    REQUIRE(hv.contributions.size() == pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(hv.contributions[i] == doctest::Approx(grid[i]).epsilon(1e-9));
    }
    const double sum = std::accumulate(hv.contributions.begin(), hv.contributions.end(), 0.0);
    CHECK(sum == doctest::Approx(hv.total).epsilon(1e-12));
  }
}

TEST_CASE("exact contribution examples") {
  const std::vector<TaggedPoint> single{{{0.5, 0.5, 0.5}, "a"}};
  CHECK(exact_contribution(single, "a") == doctest::Approx(0.125));

  const std::vector<TaggedPoint> dominated{{{0.2, 0.2, 0.2}, "a"}, {{0.5, 0.5, 0.5}, "b"}};
  CHECK(exact_contribution(dominated, "b") == 0.0);

  const std::vector<TaggedPoint> pair{{{0.2, 0.8, 0.5}, "a"}, {{0.8, 0.2, 0.5}, "b"}};
  CHECK(exact_contribution(pair, "a") == doctest::Approx(0.08 - 0.02));

  try {
    exact_contribution(pair, "missing");
    FAIL("expected a lookup error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Lookup);
  }
}

TEST_CASE("emotions contributions for DELA and CLML") {
  const auto rows = test_support::published_rows();
  const auto pts = test_support::dataset_points(rows, "emotions");
  CHECK(std::abs(exact_contribution(pts, "DELA") - 0.005072) <= 1e-3);
  CHECK(std::abs(exact_contribution(pts, "CLML") - 0.021444) <= 1e-3);
}

TEST_CASE("contribution equals the hypervolume lost by removing the point") {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 300; ++t) {
    const auto pts = random_points(rng, 7);
    const std::vector<LossVector> unit{kUnitReference};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto rest = pts;
      rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
      const double drop = exact_hypervolume(pts) - exact_hypervolume(rest);
      REQUIRE(exact_contribution_at(pts, i, unit) == doctest::Approx(drop).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("Monte Carlo contribution of a single box stays within three sigma") {
  const std::vector<TaggedPoint> single{{{0.5, 0.5, 0.5}, "a"}};
  const double est = mc_contribution(single, "a", kUnitReference, 1000000, 42);
  CHECK(std::abs(est - 0.125) <= 3.0 / std::sqrt(0.125 * 1e6));
}

TEST_CASE("Monte Carlo contribution edge cases") {
  const std::vector<TaggedPoint> dominated{{{0.2, 0.2, 0.2}, "a"}, {{0.5, 0.5, 0.5}, "b"}};
  CHECK(mc_contribution(dominated, "b", kUnitReference, 1000, 1) == 0.0);

  const std::vector<TaggedPoint> tiny{{{0.01, 0.01, 0.01}, "a"}};
  std::uint64_t seed = 0;
  while (mc_contribution(tiny, "a", kUnitReference, 1, seed) == 0.0) ++seed;
  CHECK(mc_contribution(tiny, "a", kUnitReference, 1, seed) == 1.0);

  CHECK(mc_contribution(dominated, "a", kUnitReference, 5000, 3) ==
        mc_contribution(dominated, "a", kUnitReference, 5000, 3));
  CHECK_THROWS_AS(mc_contribution(tiny, "a", kUnitReference, 0, 1), Error);
}

TEST_CASE("Monte Carlo contributions stay within four sigma of exact on random fronts") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  const std::vector<LossVector> unit{kUnitReference};
  int misses = 0;
  const int trials = 200;
  const std::uint64_t g = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto pts = random_points(rng, size(rng));
    const double exact = exact_contribution_at(pts, 0, unit);
    const double est = mc_contribution_at(pts, 0, unit, g, 1000 + t);
    const double bound = 4.0 * std::sqrt(exact * (1.0 - exact) / g);
    if (std::abs(est - exact) > bound + 1e-15) ++misses;
  }
  CHECK(misses <= trials / 100);
}

}  // TEST_SUITE
