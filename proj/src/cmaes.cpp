#include "clml/cmaes.hpp"

#include "clml/error.hpp"
#include "clml/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace clml {

std::size_t default_population(std::size_t dim) {
  return 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

double default_c_cov(std::size_t dim) {
  const double l = static_cast<double>(dim);
  return std::min(2.0 / (l * l), 0.5);
}

Vector recombination_weights(std::size_t mu) {
  if (mu < 1) fail(ErrorKind::Config, "recombination weights need mu >= 1");
  Vector w(static_cast<Eigen::Index>(mu));
  for (std::size_t i = 0; i < mu; ++i) {
    w(static_cast<Eigen::Index>(i)) =
        std::log(static_cast<double>(mu) + 1.0) - std::log(static_cast<double>(i) + 1.0);
  }
  return w / w.sum();
}

CmaState CmaState::create(Vector mean, const CmaConfig& config) {
  if (mean.size() < 1) fail(ErrorKind::Config, "optimizer dimension must be >= 1");
  if (!mean.allFinite()) fail(ErrorKind::Numeric, "initial mean contains non-finite values");
  CmaState s;
  const std::size_t dim = static_cast<std::size_t>(mean.size());
  s.mean = std::move(mean);
  s.lambda = config.population.value_or(default_population(dim));
  s.mu = config.parents.value_or(s.lambda / 2);
  s.sigma = config.sigma.value_or(kDefaultSigma);
  s.c_cov = config.c_cov.value_or(default_c_cov(dim));
  s.literal_updates = config.literal_updates;
  s.step_size_rule = config.step_size_rule;

  if (s.lambda < 2) fail(ErrorKind::Config, "population size must be >= 2");
  if (s.mu < 1 || s.mu >= s.lambda) fail(ErrorKind::Config, "parents must satisfy 1 <= mu < lambda");
  if (!(s.sigma >= 0.0) || !std::isfinite(s.sigma)) fail(ErrorKind::Config, "sigma must be finite and >= 0");
  if (!(s.c_cov >= 0.0 && s.c_cov <= 1.0)) fail(ErrorKind::Config, "c_cov must lie in [0, 1]");

  s.weights = recombination_weights(s.mu);
  const auto n = static_cast<Eigen::Index>(dim);
  s.cov = Matrix::Identity(n, n);
  s.factor = Matrix::Identity(n, n);
  s.factor_triangular = true;
  return s;
}

Vector sample_candidate(const CmaState& state, std::uint64_t seed, std::size_t index) {
  std::mt19937_64 rng(derive_seed(derive_seed(seed, index), kSampleStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(state.mean.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = normal(rng);
  if (state.factor_triangular) {
    const Vector step = state.factor.triangularView<Eigen::Lower>() * z;
    return state.mean + state.sigma * step;
  }
  return state.mean + state.sigma * (state.factor * z);
}

std::vector<Vector> sample_population(const CmaState& state, std::uint64_t seed) {
  std::vector<Vector> population;
  population.reserve(state.lambda);
  for (std::size_t i = 0; i < state.lambda; ++i) population.push_back(sample_candidate(state, seed, i));
  return population;
}

std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  return order;
}

namespace {

void require_parents(const CmaState& state, std::span<const Vector> ranked) {
  if (ranked.size() < state.mu) {
    std::ostringstream msg;
    msg << "update needs " << state.mu << " ranked candidates, got " << ranked.size();
    fail(ErrorKind::Arity, msg.str());
  }
  for (std::size_t i = 0; i < state.mu; ++i) {
    if (ranked[i].size() != state.mean.size()) fail(ErrorKind::Dimension, "candidate length differs from mean");
  }
}

// In-place update of lower-triangular L so that L L^T gains x x^T.
// Returns false when a pivot vanishes.
bool cholesky_rank_one(Matrix& lower, Vector x) {
  const Eigen::Index n = lower.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double lkk = lower(k, k);
    if (!(lkk > 0.0)) return false;
    const double r = std::hypot(lkk, x(k));
    const double c = r / lkk;
    const double s = x(k) / lkk;
    lower(k, k) = r;
    if (k + 1 < n) {
      const Eigen::Index m = n - k - 1;
      auto col = lower.col(k).tail(m);
      auto rest = x.tail(m);
      col = (col + s * rest) / c;
      rest = c * rest - s * col;
    }
  }
  return lower.diagonal().allFinite() && (lower.diagonal().array() > 0.0).all();
}

void refactor(CmaState& state) {
  Eigen::LLT<Matrix> llt(state.cov);
  if (llt.info() == Eigen::Success) {
    state.factor = llt.matrixL();
    state.factor_triangular = true;
    return;
  }
  state.cov = repair_covariance(state.cov);
  llt.compute(state.cov);
  if (llt.info() == Eigen::Success) {
    state.factor = llt.matrixL();
    state.factor_triangular = true;
    return;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(state.cov);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Numeric, "covariance factorization failed after repair");
  state.factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  state.factor_triangular = false;
}

}  // namespace

Vector weighted_step(const CmaState& state, std::span<const Vector> ranked) {
  require_parents(state, ranked);
  Vector v = Vector::Zero(state.mean.size());
  for (std::size_t i = 0; i < state.mu; ++i) {
    const double w = state.weights(static_cast<Eigen::Index>(i));
    if (state.literal_updates) {
      v += w * ranked[i];
    } else if (state.sigma > 0.0) {
      v += w * (ranked[i] - state.mean) / state.sigma;
    }
  }
  return v;
}

Vector update_mean(const CmaState& state, std::span<const Vector> ranked) {
  require_parents(state, ranked);
  if (state.literal_updates) return state.mean + state.sigma * weighted_step(state, ranked);
  // sigma * sum w_i (theta_i - m) / sigma, written without the division so sigma = 0 is harmless.
  Vector m = state.mean;
  for (std::size_t i = 0; i < state.mu; ++i) {
    m += state.weights(static_cast<Eigen::Index>(i)) * (ranked[i] - state.mean);
  }
  return m;
}

Matrix rank_one_covariance(const CmaState& state, std::span<const Vector> ranked) {
  const Vector v = weighted_step(state, ranked);
  Matrix c = (1.0 - state.c_cov) * state.cov;
  c.noalias() += state.c_cov * (v * v.transpose());
  return c;
}

Matrix update_covariance(const CmaState& state, std::span<const Vector> ranked) {
  return repair_covariance(rank_one_covariance(state, ranked));
}

Matrix repair_covariance(const Matrix& cov) {
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigendecomposition failed during covariance repair");
  if (eig.eigenvalues().minCoeff() >= kEigenFloor) return sym;
  const Vector lifted = eig.eigenvalues().cwiseMax(kEigenFloor);
  Matrix out = eig.eigenvectors() * lifted.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

void advance_generation(CmaState& state, std::span<const Vector> ranked) {
  const Vector v = weighted_step(state, ranked);
  const Vector new_mean = update_mean(state, ranked);
  if (!new_mean.allFinite() || !v.allFinite()) fail(ErrorKind::Numeric, "optimizer update produced non-finite values");

  state.cov *= (1.0 - state.c_cov);
  state.cov.noalias() += state.c_cov * (v * v.transpose());
  state.cov = (0.5 * (state.cov + state.cov.transpose())).eval();
  state.mean = new_mean;

  bool ok = false;
  if (state.factor_triangular && state.c_cov < 1.0) {
    Matrix trial = std::sqrt(1.0 - state.c_cov) * state.factor;
    if (cholesky_rank_one(trial, std::sqrt(state.c_cov) * v)) {
      state.factor = std::move(trial);
      ok = true;
    }
  }
  if (!ok) refactor(state);
}

void adapt_step_size(CmaState& state, double success_fraction) {
  state.sigma *= std::exp((success_fraction - 0.2) / 0.8);
}

double minimize_sphere(std::size_t dim, std::size_t epochs, std::uint64_t seed, const CmaConfig& config) {
  if (dim < 1) fail(ErrorKind::Config, "sphere dimension must be >= 1");
  CmaState state = CmaState::create(Vector::Ones(static_cast<Eigen::Index>(dim)), config);
  auto sphere = [](const Vector& x) { return x.squaredNorm(); };
  double best = sphere(state.mean);

  std::vector<double> fitness(state.lambda);
  std::vector<Vector> ranked(state.lambda);
  for (std::size_t t = 0; t < epochs; ++t) {
    const auto population = sample_population(state, derive_seed(seed, t));
    const double parent = sphere(state.mean);
    std::size_t successes = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      const double f = sphere(population[i]);
      best = std::min(best, f);
      fitness[i] = -f;
      if (f < parent) ++successes;
    }
    const auto order = rank_by_fitness(fitness);
    for (std::size_t i = 0; i < order.size(); ++i) ranked[i] = population[order[i]];
    advance_generation(state, ranked);
    if (state.step_size_rule) {
      adapt_step_size(state, static_cast<double>(successes) / static_cast<double>(state.lambda));
    }
  }
  return best;
}

}  // namespace clml
