#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace tcindiff::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 2,
  exit_assumption = 3,
  exit_numeric = 4,
  exit_check = 5,
};

struct RunOptions {
  std::string out_dir = ".";
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
  std::ostream* log = nullptr;  // human-readable summary; null for silence
};

const std::vector<std::string>& command_names();

// Runs one subcommand and writes <out_dir>/<command>*.csv. Never throws.
int run_command(const std::string& command, ScenarioConfig cfg, const RunOptions& opt);

}  // namespace tcindiff::cli
