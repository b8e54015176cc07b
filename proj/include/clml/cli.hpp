#pragma once

#include "clml/error.hpp"
#include "clml/trainer.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace clml {

/// 0 success, 2 input error, 3 precondition error, 4 numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitNumeric = 4;

int exit_code(ErrorKind kind) noexcept;

/// Everything a command needs, after merging defaults, the --config file and flags.
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path out = "out";
  std::optional<std::uint64_t> seed;
  TrainConfig train;
  std::size_t checkpoint_every = 25;
  bool resume = false;

  std::vector<std::size_t> embeddings;   // sweep
  std::filesystem::path results;         // report
  double alpha = 0.05;                   // report
  std::filesystem::path front;           // hv
  LossVector ref = kUnitReference;       // hv
  bool mc = false;                       // hv: also estimate by Monte Carlo
  std::filesystem::path checkpoint;      // eval
  std::string split = "test";            // eval
};

/// Reads a JSON config. ${VAR} expands from the environment in every path,
/// and relative paths resolve against the config file's directory.
RunConfig read_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Entry point of the clml tool. Errors are reported on `err` as one JSON
/// object {"error": {"kind", "message", "exit_code"}}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace clml
