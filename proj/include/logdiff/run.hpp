// Command execution: runs simulations and verification suites, writes the
// diagnostics CSV (versioned schema, one row per accepted step), a summary
// JSON with stable keys, and profile snapshots with tail sidecars. Exit
// status 0 iff every asserted invariant passed.
#pragma once

#include <string>

#include "logdiff/config.hpp"

namespace logdiff {

struct RunOptions {
  std::string out_dir = "logdiff-out";
  int threads = 1;
  bool seed_override = false;
  unsigned seed = 0;
};

int run_command(const RunConfig& config, const RunOptions& options);

}  // namespace logdiff
