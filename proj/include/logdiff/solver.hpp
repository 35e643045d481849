// Implicit time integration of u_t = Delta log u (physical frame) and
// u~_s = Delta log u~ + (1/(N-2)) div(x u~) (self-similar frame) on a radial
// grid.
//
// The unknown is v = log u, which makes every accepted state structurally
// positive, and the spatial operator is the conservative finite-volume form
// of (1/r^{N-1}) d_r(r^{N-1} d_r v) plus, in the self-similar frame, the
// drift flux r^N e^v/(N-2) with geometric face means. The resulting Newton
// systems are tridiagonal M-matrices, so the discrete evolution obeys the
// comparison principle and contracts in the lumped L1 norm - the discrete
// counterparts of the sandwich and L1-contraction statements it is used to
// monitor.
#pragma once

#include <functional>

#include "logdiff/diagnostics.hpp"
#include "logdiff/grid.hpp"
#include "logdiff/transform.hpp"

namespace logdiff {

// pinned_barenblatt holds the boundary node at B~_{k_b}(r_max) (or the
// physical B_{k_b}(r_max, t)); fitted_tail fits c/(k+r^2) to the last 10% of
// interior nodes each step and uses the law's log-gradient to close the
// exterior face while the boundary node stays part of the implicit system.
enum class BoundaryMode { pinned_barenblatt, fitted_tail };
enum class TimeScheme { backward_euler, trbdf2 };

struct SolverConfig {
  double dt = 1e-2;
  double newton_tol = 1e-10;      // max-norm of the per-node residual, u units
  int newton_max_iter = 50;
  BoundaryMode boundary = BoundaryMode::pinned_barenblatt;
  double boundary_k = 1.0;        // k_b of the pinned Barenblatt value
  Frame frame;
  double positivity_floor = 1e-30;
  TimeScheme scheme = TimeScheme::backward_euler;

  void validate() const;
};

struct EvolutionState {
  RadialProfile profile;
  double clock = 0.0;
  long step_count = 0;
  FrameKind frame_kind = FrameKind::selfsimilar;
};

// Validates strict positivity and a finite clock.
EvolutionState make_state(RadialProfile profile, double clock, FrameKind kind);

enum class StepStatus { ok, newton_failed, near_extinction };

struct StepResult {
  StepStatus status = StepStatus::ok;
  std::optional<EvolutionState> state;  // engaged only when status == ok
  int newton_iterations = 0;
};

// One implicit step of size dt (config.dt ignored). Near-extinction fires
// when the boundary value or any node would fall below positivity_floor.
StepResult step_dt(const EvolutionState& state, const SolverConfig& config, double dt);

// One implicit step of size config.dt.
StepResult step(const EvolutionState& state, const SolverConfig& config);

using Monitor = std::function<void(const EvolutionState& prev, const EvolutionState& next,
                                   double dt_used, DiagnosticsRecord& rec)>;

enum class StopReason { horizon_reached, near_extinction };

struct EvolveResult {
  EvolutionState final_state;
  DiagnosticsSeries diagnostics;
  StopReason stop = StopReason::horizon_reached;
};

// Steps until the clock reaches `horizon`, halving dt on Newton failure (at
// most 10 halvings per attempt) and cautiously doubling back to config.dt
// after 5 consecutive easy steps. Each monitor fills fields of the one
// diagnostics record appended per accepted step.
EvolveResult evolve(EvolutionState initial, const SolverConfig& config, double horizon,
                    const std::vector<Monitor>& monitors);

using PairMonitor = std::function<void(const EvolutionState& a, const EvolutionState& b,
                                       double dt_used, DiagnosticsRecord& rec)>;

struct PairEvolveResult {
  EvolutionState a;
  EvolutionState b;
  DiagnosticsSeries diagnostics;
  StopReason stop = StopReason::horizon_reached;
};

// Evolves two states in lockstep (identical dt sequence) so pairwise
// distances are sampled at common clocks.
PairEvolveResult evolve_pair(EvolutionState a, EvolutionState b, const SolverConfig& config,
                             double horizon, const std::vector<PairMonitor>& monitors);

// One implicit step of the linear difference equation
//   p_s = Delta(a~ p) + (1/(N-2)) div(x p)
// with frozen coefficient a~ (drift present only in the self-similar frame).
// The coefficient must satisfy c_lower (1+r^2) <= a~ <= c_upper (1+r^2); the
// boundary node is held at boundary_value.
RadialProfile solve_dirichlet_frozen(const RadialProfile& coeff, const RadialProfile& p,
                                     double dt, const Frame& frame, double boundary_value,
                                     double c_lower, double c_upper);

}  // namespace logdiff
