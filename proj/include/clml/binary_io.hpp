#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

namespace clml {

// Little-endian scalar streams for checkpoint files, independent of host order.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void bytes(std::span<const char> data);
  void u8(std::uint8_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void f64s(std::span<const double> values);
  void str(const std::string& s);
  void matrix(const Eigen::MatrixXd& m);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void expect_magic(std::string_view magic);
  std::uint8_t u8();
  std::uint64_t u64();
  double f64();
  void f64s(std::span<double> out);
  std::string str();
  Eigen::MatrixXd matrix();

 private:
  void read(char* dst, std::size_t n);

  std::istream& in_;
  std::string source_;
};

}  // namespace clml
