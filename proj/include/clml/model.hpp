#pragma once

#include "clml/losses.hpp"

#include <cstddef>
#include <filesystem>

namespace clml {

inline constexpr double kStandardizeEpsilon = 1e-8;
inline constexpr std::size_t kRecommendedEmbedding = 20;

/// Input features d, embedding width c, labels k.
struct ModelShape {
  std::size_t d = 1;
  std::size_t c = kRecommendedEmbedding;
  std::size_t k = 1;

  /// L = d*c + c + c*c + c + c*k + k.
  std::size_t parameter_count() const noexcept { return d * c + c + c * c + c + c * k + k; }
  void validate() const;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

/// The network's weights laid out as one flat vector, the search space of the optimizer.
struct ModelParams {
  ModelShape shape;
  Vector flat;

  /// All-zero parameters; every output is sigmoid(0) = 0.5.
  static ModelParams zeros(const ModelShape& shape);
};

/// Unpacked view of the layers. Flat layout: encoder (d x c, row-major),
/// encoder bias, hidden (c x c, row-major), hidden bias, decoder (c x k,
/// row-major), decoder bias.
struct Layers {
  Matrix encoder;
  Vector encoder_bias;
  Matrix hidden;
  Vector hidden_bias;
  Matrix decoder;
  Vector decoder_bias;
};

Layers unpack(const ModelParams& params);
ModelParams pack(const ModelShape& shape, const Layers& layers);

/// Per-row z-score with population std and a max(std, eps) divisor.
Matrix row_standardize(const Matrix& m, double eps = kStandardizeEpsilon);

/// Y = s(s(g(s(g(X E + bE)) W + bW)) D + bD) with s the logistic function and
/// g row standardization. Row i of the output depends only on row i of x.
ScoreMatrix forward(const ModelParams& params, const Matrix& x);

// Checkpoint: magic "CLMM", version byte, d, c, k as u64, then L doubles,
// all little-endian.
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace clml
