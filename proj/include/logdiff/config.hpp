// Run configuration: plain-text `key = value` documents (UTF-8, `#`
// comments), validated into a RunConfig with all defaults filled and unknown
// keys rejected.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "logdiff/solver.hpp"

namespace logdiff {

enum class Command { simulate, barenblatt_table, match_k0, verify, theorem1, theorem2 };

const char* command_name(Command c);

enum class InitialKind { barenblatt, mean_of_barenblatts, barenblatt_plus_bump };

struct InitialData {
  InitialKind kind = InitialKind::barenblatt;
  double k = 1.0;                                  // barenblatt(k)
  double k1 = 4.0, k2 = 1.0, weight = 0.5;         // mean-of-barenblatts(k1,k2,w)
  double k0 = 1.0, amplitude = 0.1;                // barenblatt-plus-bump(k0,a,lo,hi)
  double support_lo = 1.0, support_hi = 2.0;
};

struct RunConfig {
  Command command = Command::simulate;
  int dimension = 3;
  double t_extinction = 1.0;
  double k1 = 0.0, k2 = 0.0, k0 = 0.0;  // 0 = unset
  double r_max = 30.0;
  int m_nodes = 800;
  double stretch = 1.0;
  double dt = 0.01;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  BoundaryMode boundary = BoundaryMode::pinned_barenblatt;
  double boundary_k = 0.0;  // 0 = resolved from the run's k0
  FrameKind frame = FrameKind::selfsimilar;
  double horizon = 10.0;
  InitialData initial;
  std::vector<double> snapshots;
  double positivity_floor = 1e-30;
  TimeScheme scheme = TimeScheme::backward_euler;
  double bracket_lo = 0.0, bracket_hi = 0.0;  // 0 = derived from k1/k2
  unsigned seed = 12345;
};

// Parses and validates; `command` is the CLI subcommand (authoritative; a
// `command =` key in the document must agree).
RunConfig parse_config(const std::string& text, Command command);

// The smooth bump used by the *-plus-bump descriptors: sup = 1 at the center
// of [lo, hi], identically zero outside.
double bump_profile(double r, double lo, double hi);

// Initial data construction on a grid (physical frame at t = 0, or the
// self-similar frame when `selfsimilar`); the boundary node and tail follow
// pin_k when pinned boundaries are used.
RadialProfile build_initial_data(const RunConfig& config, GridPtr grid, bool selfsimilar,
                                 double pin_k);

}  // namespace logdiff
