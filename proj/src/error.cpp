#include "clml/error.hpp"

namespace clml {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::UndefinedMetric: return "undefined_metric";
    case ErrorKind::Lookup: return "lookup";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Config: return "config";
    case ErrorKind::IncompleteGrid: return "incomplete_grid";
    case ErrorKind::Arity: return "arity";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace clml
