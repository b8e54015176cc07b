#pragma once

#include "clml/losses.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace clml {

inline constexpr double kDefaultSigma = 0.3;
inline constexpr double kEigenFloor = 1e-12;

/// Overrides for the optimizer; unset fields take the dimension-dependent defaults.
struct CmaConfig {
  std::optional<std::size_t> population;  // lambda
  std::optional<std::size_t> parents;     // mu
  std::optional<double> sigma;
  std::optional<double> c_cov;
  // Add the raw sampled vectors (not the centred steps) in the mean and
  // covariance updates, exactly as the update equations are printed.
  bool literal_updates = false;
  // Experimental 1/5th-success step-size control. Off by default.
  bool step_size_rule = false;
};

std::size_t default_population(std::size_t dim);
/// Capped at 0.5 so tiny problems keep a valid learning rate.
double default_c_cov(std::size_t dim);
/// w_i proportional to ln(mu + 1) - ln(i), normalized to sum to one.
Vector recombination_weights(std::size_t mu);

struct CmaState {
  Vector mean;
  Matrix cov;
  double sigma = kDefaultSigma;
  std::size_t lambda = 2;
  std::size_t mu = 1;
  Vector weights;
  double c_cov = 0.0;
  bool literal_updates = false;
  bool step_size_rule = false;

  // A with A A^T = cov, used for sampling. Lower-triangular (Cholesky) unless
  // the last repair had to fall back to an eigen factor.
  Matrix factor;
  bool factor_triangular = true;

  /// Identity covariance around `mean`.
  static CmaState create(Vector mean, const CmaConfig& config = {});

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// lambda candidates m + sigma * A z_i; candidate i draws z_i from a stream
/// seeded with derive_seed(seed, i), so the population does not depend on
/// the order candidates are generated in.
std::vector<Vector> sample_population(const CmaState& state, std::uint64_t seed);
Vector sample_candidate(const CmaState& state, std::uint64_t seed, std::size_t index);

/// Candidate indices ordered best first: descending fitness, ties by index.
std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness);

/// Weighted sum of the top-mu steps; ranked must hold at least mu vectors, best first.
Vector weighted_step(const CmaState& state, std::span<const Vector> ranked);

/// m' = m + sigma * sum w_i y_i with y_i = (theta_i - m) / sigma.
Vector update_mean(const CmaState& state, std::span<const Vector> ranked);

/// C' = (1 - c) C + c v v^T with v = sum w_i y_i, before any repair.
Matrix rank_one_covariance(const CmaState& state, std::span<const Vector> ranked);

/// rank_one_covariance followed by repair_covariance.
Matrix update_covariance(const CmaState& state, std::span<const Vector> ranked);

/// Symmetrize and lift eigenvalues below kEigenFloor up to it.
Matrix repair_covariance(const Matrix& cov);

/// One generation: mean, covariance and sampling factor updated in place.
/// The factor follows by an O(L^2) Cholesky rank-one update; a full repair
/// only happens when that update breaks down.
void advance_generation(CmaState& state, std::span<const Vector> ranked);

/// Experimental 1/5th rule; success_fraction in [0, 1].
void adapt_step_size(CmaState& state, double success_fraction);

/// Optimizer self-test: minimizes ||x||^2 from (1,...,1). Returns the best
/// value seen, f(m0) = dim when epochs == 0.
double minimize_sphere(std::size_t dim, std::size_t epochs, std::uint64_t seed,
                       const CmaConfig& config = {});

}  // namespace clml
