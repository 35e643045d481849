// Norms, distances, potentials, the mass-matching k0 solver, the mean-value
// coefficient, and the invariant monitors attached to evolutions: plain and
// weighted L1 contraction, sandwich margins, the Aronson-Benilan inequality
// u_t <= u/t, envelope bounds, and the ball-integral growth estimator.
// Statements of the form "there exists a constant C" become estimators that
// report fitted constants; nothing asserts a specific C.
#pragma once

#include <utility>
#include <vector>

#include "logdiff/barenblatt.hpp"
#include "logdiff/diagnostics.hpp"
#include "logdiff/grid.hpp"
#include "logdiff/solver.hpp"

namespace logdiff {

// int |f-g| dx with tail handling.
double l1_distance(const RadialProfile& f, const RadialProfile& g);

// int |f-g| B~^alpha dx with alpha = (N-4)/2 and weight parameter k2.
// N >= 5 only; the weighted tail of a difference of distinct Barenblatt
// laws is log-divergent and is rejected by the tail certificate.
double weighted_l1_distance(const RadialProfile& f, const RadialProfile& g, double k2,
                            int dimension);

// Unique k0 with int(u0 - B_k0(.,0)) dx = 0 (N = 3), by bisection of the
// continuous monotone increasing mass function over the given bracket.
double match_k0(const RadialProfile& u0, double T, int dimension,
                std::pair<double, double> bracket);

// Signed mass function f(k) = int(u0 - B_k(.,0)) dx used by match_k0.
double mass_mismatch_at(const RadialProfile& u0, double T, int dimension, double k);

enum class PotentialFlavor { newtonian, green_ball };

struct PotentialProfile {
  RadialProfile profile;
  PotentialFlavor flavor = PotentialFlavor::newtonian;
  double ball_radius = 0.0;  // green_ball only
};

// Z(r) = int_r^inf rho^{1-N} (int_0^rho f sigma^{N-1} dsigma) drho for f >= 0
// with finite total mass; satisfies Delta Z = -f.
PotentialProfile newtonian_potential_radial(const RadialProfile& f);

// G~_R(psi)(r) = int_0^r rho^{1-N} (int_0^rho psi sigma^{N-1} dsigma) drho,
// non-decreasing with G(0) = 0; requires R <= r_max.
PotentialProfile green_potential_radial(const RadialProfile& psi, double R);

// a~ = int_0^1 dtheta/(theta u + (1-theta) v) = (log u - log v)/(u - v),
// with the 1/u limit at nodes where the profiles agree to 1e-12 relative.
RadialProfile mean_value_coefficient(const RadialProfile& u, const RadialProfile& v);

enum class ContractionMode { plain_l1, weighted_l1 };

struct ContractionReport {
  bool passed = true;
  std::size_t first_violation = static_cast<std::size_t>(-1);
  double worst_step_ratio = 0.0;  // max over steps of d_{n+1}/d_n
  std::vector<std::pair<double, double>> checkpoint_ratios;  // (clock, d(c+1)/d(c))
  bool strict_decrease_at_checkpoints = true;
  double fitted_slack_slope = 0.0;  // weighted: best C in d(s) <= d(0) + C s
  std::size_t increasing_steps = 0;
};

// Plain mode asserts per-step non-increase within 1e-8 relative and reports
// strict-decrease ratios between unit-clock checkpoints; weighted mode fits
// the +Cs slack and reports per-step/checkpoint decrease. The underlying
// bounds carry no explicit constants, so fitted values are reported, never
// asserted.
ContractionReport check_contraction(const DiagnosticsSeries& series, ContractionMode mode);

// max over nodes of (u_next - u_prev)/dt - u_next/t_next, clamped at 0.
double check_aronson_benilan(const EvolutionState& prev, const EvolutionState& next);

struct EnvelopeReport {
  bool bounded = true;  // false if some profile had a non-positive minimum
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  std::vector<double> clocks, lower_values, upper_values;  // m(s), M(s)
};

// m(s) = min_{r >= r0} u(r)(1+r^2), M(s) = max; fits log m, log M between
// affine-in-e^s envelopes with non-negative C3.
EnvelopeReport check_envelope(const std::vector<std::pair<double, RadialProfile>>& series,
                              double r0, double f_l1);

// Smallest C making
//   (int_{B_R}(u-v)_+ at t)^{1/2} <= (int_{B_2R}(u0-v0)_+)^{1/2} + C R^{(N-2)/2} sqrt(T)
// hold over the given radii and all records with t <= T - delta and
// R >= sqrt(barrier_k) delta^{-1/(N-2)}.
double estimate_growth_constant(const std::vector<std::pair<double, RadialProfile>>& u_series,
                                const std::vector<std::pair<double, RadialProfile>>& v_series,
                                std::span<const double> radii, double delta, double T,
                                double barrier_k);

// --- monitor factories -----------------------------------------------------

Monitor make_l1_monitor(RadialProfile reference);
Monitor make_weighted_l1_monitor(RadialProfile reference, double k2);
Monitor make_sup_monitor(RadialProfile reference);
Monitor make_mass_monitor(RadialProfile reference);
Monitor make_ab_monitor();

// Margins against stationary rescaled barriers B~_{k1} <= u <= B~_{k2}; a
// margin below fatal_rel * sup(B~_{k2}) throws MonitorViolationError
// (pass -infinity to disable).
Monitor make_sandwich_monitor(GridPtr grid, double k1, double k2, double fatal_rel);

// Same against the time-dependent physical barriers B_{k1}(.,t), B_{k2}(.,t).
Monitor make_sandwich_monitor_physical(BarenblattSpec lower, BarenblattSpec upper,
                                       double fatal_rel);

// min over nodes of min(a~ - (k2+r^2)/(2(N-2)), (k1+r^2)/(2(N-2)) - a~)
// for a~ between the state and a stationary reference.
Monitor make_coeff_bound_monitor(RadialProfile reference, double k1, double k2);

// Captures (clock, profile) snapshots every `spacing` clock units.
Monitor make_snapshot_monitor(std::vector<std::pair<double, RadialProfile>>* sink,
                              double spacing);

// Pairwise versions for lockstep evolutions.
PairMonitor make_pair_l1_monitor();
PairMonitor make_pair_weighted_l1_monitor(double k2);
PairMonitor make_pair_coeff_bound_monitor(double k1, double k2);
// Applies a single-state monitor to state `a` of a pair run.
PairMonitor on_state_a(Monitor monitor);

}  // namespace logdiff
