#include "clml/binary_io.hpp"

#include "clml/error.hpp"

#include <array>
#include <bit>

namespace clml {

void BinaryWriter::bytes(std::span<const char> data) {
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out_) fail(ErrorKind::Io, "write failed");
}

void BinaryWriter::u8(std::uint8_t v) { bytes(std::span<const char>(reinterpret_cast<const char*>(&v), 1)); }

void BinaryWriter::u64(std::uint64_t v) {
  std::array<char, 8> buf{};
  for (std::size_t i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  bytes(buf);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::f64s(std::span<const double> values) {
  for (double v : values) f64(v);
}

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  bytes(std::span<const char>(s.data(), s.size()));
}

void BinaryWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  f64s(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

void BinaryReader::read(char* dst, std::size_t n) {
  in_.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    fail(ErrorKind::Parse, source_ + ": unexpected end of file");
  }
}

void BinaryReader::expect_magic(std::string_view magic) {
  std::string got(magic.size(), '\0');
  read(got.data(), got.size());
  if (got != magic) fail(ErrorKind::Parse, source_ + ": bad magic, expected '" + std::string(magic) + "'");
}

std::uint8_t BinaryReader::u8() {
  char c = 0;
  read(&c, 1);
  return static_cast<std::uint8_t>(c);
}

std::uint64_t BinaryReader::u64() {
  std::array<unsigned char, 8> buf{};
  read(reinterpret_cast<char*>(buf.data()), 8);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

void BinaryReader::f64s(std::span<double> out) {
  for (double& v : out) v = f64();
}

std::string BinaryReader::str() {
  const auto n = u64();
  if (n > (1ULL << 32)) fail(ErrorKind::Parse, source_ + ": implausible string length");
  std::string s(n, '\0');
  read(s.data(), s.size());
  return s;
}

Eigen::MatrixXd BinaryReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (rows > (1ULL << 24) || cols > (1ULL << 24)) {
    fail(ErrorKind::Parse, source_ + ": implausible matrix shape");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  f64s(std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

}  // namespace clml
