#include "clml/model.hpp"

#include "clml/binary_io.hpp"
#include "clml/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace clml {

namespace {

constexpr std::string_view kModelMagic = "CLMM";
constexpr std::uint8_t kModelVersion = 1;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix read_block(const Vector& flat, std::size_t& offset, std::size_t rows, std::size_t cols) {
  Matrix m = Eigen::Map<const RowMajor>(flat.data() + offset, static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(cols));
  offset += rows * cols;
  return m;
}

void write_block(Vector& flat, std::size_t& offset, const Matrix& m) {
  Eigen::Map<RowMajor>(flat.data() + offset, m.rows(), m.cols()) = m;
  offset += static_cast<std::size_t>(m.size());
}

void check_block(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols) {
    std::ostringstream msg;
    msg << "pack: " << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows
        << "x" << cols;
    fail(ErrorKind::Dimension, msg.str());
  }
}

Matrix logistic(const Matrix& m) { return (1.0 / (1.0 + (-m.array()).exp())).matrix(); }

}  // namespace

void ModelShape::validate() const {
  if (d < 1 || c < 1 || k < 1) fail(ErrorKind::Config, "model shape requires d, c, k >= 1");
}

ModelParams ModelParams::zeros(const ModelShape& shape) {
  shape.validate();
  return {shape, Vector::Zero(static_cast<Eigen::Index>(shape.parameter_count()))};
}

Layers unpack(const ModelParams& params) {
  const auto& s = params.shape;
  s.validate();
  if (static_cast<std::size_t>(params.flat.size()) != s.parameter_count()) {
    std::ostringstream msg;
    msg << "unpack: parameter vector has " << params.flat.size() << " entries, shape needs "
        << s.parameter_count();
    fail(ErrorKind::Dimension, msg.str());
  }
  std::size_t off = 0;
  Layers layers;
  layers.encoder = read_block(params.flat, off, s.d, s.c);
  layers.encoder_bias = read_block(params.flat, off, s.c, 1);
  layers.hidden = read_block(params.flat, off, s.c, s.c);
  layers.hidden_bias = read_block(params.flat, off, s.c, 1);
  layers.decoder = read_block(params.flat, off, s.c, s.k);
  layers.decoder_bias = read_block(params.flat, off, s.k, 1);
  return layers;
}

ModelParams pack(const ModelShape& shape, const Layers& layers) {
  shape.validate();
  check_block(layers.encoder, shape.d, shape.c, "encoder");
  check_block(layers.encoder_bias, shape.c, 1, "encoder bias");
  check_block(layers.hidden, shape.c, shape.c, "hidden");
  check_block(layers.hidden_bias, shape.c, 1, "hidden bias");
  check_block(layers.decoder, shape.c, shape.k, "decoder");
  check_block(layers.decoder_bias, shape.k, 1, "decoder bias");
  ModelParams params{shape, Vector(static_cast<Eigen::Index>(shape.parameter_count()))};
  std::size_t off = 0;
  write_block(params.flat, off, layers.encoder);
  write_block(params.flat, off, layers.encoder_bias);
  write_block(params.flat, off, layers.hidden);
  write_block(params.flat, off, layers.hidden_bias);
  write_block(params.flat, off, layers.decoder);
  write_block(params.flat, off, layers.decoder_bias);
  return params;
}

Matrix row_standardize(const Matrix& m, double eps) {
  Matrix out(m.rows(), m.cols());
  const double width = static_cast<double>(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mean = m.row(i).sum() / width;
    const double var = (m.row(i).array() - mean).square().sum() / width;
    const double scale = std::max(std::sqrt(var), eps);
    out.row(i) = (m.row(i).array() - mean) / scale;
  }
  return out;
}

ScoreMatrix forward(const ModelParams& params, const Matrix& x) {
  const Layers layers = unpack(params);
  if (static_cast<std::size_t>(x.cols()) != params.shape.d) {
    std::ostringstream msg;
    msg << "forward: input has " << x.cols() << " columns, model expects " << params.shape.d;
    fail(ErrorKind::Dimension, msg.str());
  }
  if (!x.allFinite()) fail(ErrorKind::Numeric, "forward: input contains non-finite values");
  if (!params.flat.allFinite()) fail(ErrorKind::Numeric, "forward: parameters contain non-finite values");

  Matrix h = x * layers.encoder;
  h.rowwise() += layers.encoder_bias.transpose();
  h = logistic(row_standardize(h));

  Matrix g = h * layers.hidden;
  g.rowwise() += layers.hidden_bias.transpose();
  g = logistic(row_standardize(g));

  Matrix y = g * layers.decoder;
  y.rowwise() += layers.decoder_bias.transpose();
  return ScoreMatrix(logistic(y));
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  BinaryWriter w(out);
  w.bytes(kModelMagic);
  w.u8(kModelVersion);
  w.u64(params.shape.d);
  w.u64(params.shape.c);
  w.u64(params.shape.k);
  w.f64s(std::span<const double>(params.flat.data(), static_cast<std::size_t>(params.flat.size())));
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  BinaryReader r(in, path.string());
  r.expect_magic(kModelMagic);
  const auto version = r.u8();
  if (version != kModelVersion) {
    fail(ErrorKind::Parse, path.string() + ": unsupported model version " + std::to_string(version));
  }
  ModelShape shape;
  shape.d = r.u64();
  shape.c = r.u64();
  shape.k = r.u64();
  if (shape.d > (1U << 24) || shape.c > (1U << 16) || shape.k > (1U << 20)) {
    fail(ErrorKind::Parse, path.string() + ": implausible model shape");
  }
  shape.validate();
  ModelParams params = ModelParams::zeros(shape);
  r.f64s(std::span<double>(params.flat.data(), static_cast<std::size_t>(params.flat.size())));
  return params;
}

}  // namespace clml
