#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clml {

enum class ErrorKind {
  Dimension,        // shape mismatch between paired matrices/vectors
  UndefinedMetric,  // metric has no valid samples to average over
  Lookup,           // unknown tag / key
  Numeric,          // non-finite values, failed factorization
  Parse,            // malformed input file
  Config,           // invalid configuration or precondition
  IncompleteGrid,   // results table missing (dataset, method) cells
  Arity,            // too few candidates for an update
  Io,               // filesystem failures
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace clml
