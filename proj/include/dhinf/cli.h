#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dhinf/sdp.h"

namespace dhinf::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kUncertified = 3,
  kNumerical = 4,
  kInvalidAlpha = 5,
};

/// Every default lives here; a --config JSON file may override any field and
/// explicit flags override the file.
struct RunConfig {
  std::string command;
  std::string input;
  bool demo_plant = false;
  std::optional<double> gamma;
  std::vector<double> alphas{0.0};
  bool minimize = false;
  std::string gain_path;
  int delta_grid = 41;
  int samples = 200;
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "json";
  SolverConfig solver;
  /// Slack on gamma when checking the closed loop after synthesis.
  double chain_tolerance = 1e-3;
  bool print_plant = false;
};

/// args excludes the program name. Reports go to `out` (or --output), notes
/// and warnings to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dhinf::cli
