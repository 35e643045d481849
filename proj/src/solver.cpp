#include "logdiff/solver.hpp"

#include <algorithm>
#include <cmath>

#include "logdiff/barenblatt.hpp"

namespace logdiff {

namespace {

// Face/volume geometry of the conservative radial operator.
struct Geometry {
  std::vector<double> h;       // cell widths
  std::vector<double> area;    // face r^{N-1} at cell midpoints
  std::vector<double> drift;   // face r^N/(N-2), zero in the physical frame
  std::vector<double> volume;  // lumped node volumes
};

Geometry make_geometry(const RadialGrid& grid, bool with_drift) {
  const int n = grid.dimension();
  const std::size_t m = grid.cell_count();
  Geometry g;
  g.h.resize(m);
  g.area.resize(m);
  g.drift.assign(m, 0.0);
  g.volume = grid.node_volumes();
  for (std::size_t i = 0; i < m; ++i) {
    g.h[i] = grid.spacing(i);
    const double rf = 0.5 * (grid.node(i) + grid.node(i + 1));
    g.area[i] = std::pow(rf, n - 1);
    if (with_drift) g.drift[i] = std::pow(rf, n) / (n - 2);
  }
  return g;
}

// Boundary closure of the Newton systems. Pinned runs hold v at the last
// node (Dirichlet); fitted-tail runs evolve the last node and close the
// exterior face with the log-gradient of the fitted law, which is the only
// amplitude-free datum the flux of Delta log u needs.
struct BoundaryClosure {
  bool dirichlet = true;
  double v_value = 0.0;       // log of the pinned value (dirichlet)
  double log_gradient = 0.0;  // d_r log u at r_max (tail-flux mode)
};

// Discrete RHS in u units: G_i = (1/w_i)(Phi_{i+1/2} - Phi_{i-1/2}) over the
// active nodes (M of them for Dirichlet closures, M+1 with a tail flux).
void flux_divergence(const Geometry& g, std::span<const double> v,
                     const BoundaryClosure& bc, int dimension, double r_max,
                     std::span<double> out) {
  const std::size_t m = g.h.size();
  const std::size_t active = bc.dirichlet ? m : m + 1;
  double flux_prev = 0.0;  // zero-area face at the origin
  for (std::size_t i = 0; i < m; ++i) {
    const double v_right = (i + 1 < active) ? v[i + 1] : bc.v_value;
    double flux = g.area[i] * (v_right - v[i]) / g.h[i];
    if (g.drift[i] != 0.0) flux += g.drift[i] * std::exp(0.5 * (v[i] + v_right));
    out[i] = (flux - flux_prev) / g.volume[i];
    flux_prev = flux;
  }
  if (!bc.dirichlet) {
    double flux = std::pow(r_max, dimension - 1) * bc.log_gradient;
    if (g.drift[0] != 0.0)
      flux += std::pow(r_max, dimension) / (dimension - 2) * std::exp(v[m]);
    out[m] = (flux - flux_prev) / g.volume[m];
  }
}

// Solves the tridiagonal system in place (Thomas; the systems assembled here
// are M-matrices, no pivoting needed).
void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                       std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
};

// Damped Newton for F(v) = e^v - rhs - cdt * G(v) = 0 over the active nodes.
// After the residual first drops below tol one more iteration is taken, so
// accepted states carry residuals near the quadratic-convergence floor
// rather than just below tol.
NewtonOutcome newton_solve(const Geometry& g, std::vector<double>& v,
                           const BoundaryClosure& bc, int dimension, double r_max,
                           std::span<const double> rhs, double cdt,
                           const SolverConfig& config) {
  const std::size_t m = g.h.size();
  const std::size_t active = bc.dirichlet ? m : m + 1;
  std::vector<double> gdiv(active), resid(active);
  std::vector<double> lower(active), diag(active), upper(active), delta(active);

  auto residual = [&](const std::vector<double>& vv, std::vector<double>& out) {
    flux_divergence(g, vv, bc, dimension, r_max, gdiv);
    double worst = 0.0;
    for (std::size_t i = 0; i < active; ++i) {
      out[i] = std::exp(vv[i]) - rhs[i] - cdt * gdiv[i];
      worst = std::max(worst, std::abs(out[i]));
    }
    return worst;
  };

  double res_norm = residual(v, resid);
  bool polished = false;
  NewtonOutcome outcome;
  std::vector<double> v_try(active);
  for (int iter = 0; iter < config.newton_max_iter; ++iter) {
    if (res_norm < config.newton_tol) {
      if (polished || res_norm == 0.0) {
        outcome.converged = true;
        outcome.iterations = iter;
        return outcome;
      }
      polished = true;
    }
    // Assemble the Jacobian.
    for (std::size_t i = 0; i < active; ++i) {
      const double w = g.volume[i];
      const double ev = std::exp(v[i]);
      double d = ev;
      double lo = 0.0, up = 0.0;
      if (i < m) {  // right face i
        const double v_right = (i + 1 < active) ? v[i + 1] : bc.v_value;
        const double gf = (g.drift[i] != 0.0) ? g.drift[i] * std::exp(0.5 * (v[i] + v_right)) : 0.0;
        d += (cdt / w) * (g.area[i] / g.h[i] - 0.5 * gf);
        if (i + 1 < active) up = -(cdt / w) * (g.area[i] / g.h[i] + 0.5 * gf);
      } else {  // exterior tail-flux face: only the drift part sees v
        if (g.drift[0] != 0.0)
          d -= (cdt / w) * std::pow(r_max, dimension) / (dimension - 2) * ev;
      }
      if (i > 0) {  // left face i-1
        const double gf = (g.drift[i - 1] != 0.0)
                              ? g.drift[i - 1] * std::exp(0.5 * (v[i - 1] + v[i]))
                              : 0.0;
        d += (cdt / w) * (g.area[i - 1] / g.h[i - 1] + 0.5 * gf);
        lo = -(cdt / w) * (g.area[i - 1] / g.h[i - 1] - 0.5 * gf);
      }
      diag[i] = d;
      lower[i] = lo;
      upper[i] = up;
      delta[i] = -resid[i];
    }
    solve_tridiagonal(lower, diag, upper, delta);
    for (double& d : delta) d = std::clamp(d, -8.0, 8.0);

    // Line search on the residual max-norm.
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t i = 0; i < active; ++i) v_try[i] = v[i] + lambda * delta[i];
      const double try_norm = residual(v_try, resid);
      if (try_norm < res_norm || try_norm < config.newton_tol) {
        v.swap(v_try);
        res_norm = try_norm;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      res_norm = residual(v, resid);  // restore resid for v
      outcome.iterations = iter + 1;
      return outcome;  // stagnated
    }
    outcome.iterations = iter + 1;
  }
  outcome.converged = res_norm < config.newton_tol;
  return outcome;
}

struct BoundaryData {
  BoundaryClosure closure;
  std::optional<TailLaw> tail;  // pinned law, or the fitted shape (c set later)
  bool extinct = false;
};

// Least-squares fit of 1/u ~ (k + r^2)/c over the last 10% of nodes. The
// boundary node is excluded: it holds the previous extrapolation, and feeding
// it back into the fit lets the far field drift.
std::optional<TailLaw> fit_tail(const RadialProfile& u) {
  const auto& r = u.grid().nodes();
  const std::size_t n = r.size() - 1;
  const std::size_t count = std::max<std::size_t>(4, n / 10);
  const std::size_t begin = n - count;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = begin; i < n; ++i) {
    if (!(u.value(i) > 0.0)) return std::nullopt;
    const double x = r[i] * r[i];
    const double y = 1.0 / u.value(i);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  const double slope = (count * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / count;
  if (!(slope > 0.0) || !(intercept / slope > 0.0)) return std::nullopt;
  return TailLaw{1.0 / slope, intercept / slope};
}

BoundaryData boundary_for(const EvolutionState& state, const SolverConfig& config,
                          double t_new) {
  const RadialGrid& grid = state.profile.grid();
  const int n = grid.dimension();
  const double r = grid.r_max();
  BoundaryData bd;
  if (config.boundary == BoundaryMode::pinned_barenblatt) {
    double value;
    if (state.frame_kind == FrameKind::selfsimilar) {
      value = rescaled_barenblatt_value(r, config.boundary_k, n);
      bd.tail = TailLaw{2.0 * (n - 2), config.boundary_k};
    } else {
      BarenblattSpec spec{config.boundary_k, config.frame.T, n};
      value = barenblatt_value(r, t_new, spec);
      const double tau = config.frame.T - t_new;
      if (value < config.positivity_floor || !(tau > 0.0)) {
        bd.extinct = true;
        return bd;
      }
      bd.tail = TailLaw{2.0 * (n - 2) * tau,
                        config.boundary_k * std::exp(-2.0 * std::log(tau) / (n - 2))};
    }
    bd.closure = BoundaryClosure{true, std::log(value), 0.0};
  } else {
    // Tail-flux closure: the fitted law supplies d_r log u at r_max, the
    // boundary node itself stays part of the implicit system.
    bd.tail = fit_tail(state.profile);
    if (bd.tail) {
      bd.closure = BoundaryClosure{false, 0.0, -2.0 * r / (bd.tail->k + r * r)};
    } else {
      // Degenerate fit (e.g. constant data): hold the current value.
      bd.closure =
          BoundaryClosure{true, std::log(state.profile.values().back()), 0.0};
    }
  }
  return bd;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw Error("dt must be positive");
  if (!(newton_tol > 0.0) || !(positivity_floor > 0.0))
    throw Error("tolerances must be positive");
  if (newton_max_iter < 1) throw Error("newton_max_iter must be >= 1");
  frame.validate();
  if (boundary == BoundaryMode::pinned_barenblatt && !(boundary_k > 0.0))
    throw Error("pinned boundary requires k_b > 0");
}

EvolutionState make_state(RadialProfile profile, double clock, FrameKind kind) {
  if (!std::isfinite(clock)) throw Error("state clock must be finite");
  if (!(profile.min_value() > 0.0))
    throw PositivityError("evolution state must be strictly positive at all nodes");
  return EvolutionState{std::move(profile), clock, 0, kind};
}

StepResult step_dt(const EvolutionState& state, const SolverConfig& config, double dt) {
  config.validate();
  if (!(dt > 0.0)) throw Error("dt must be positive");
  if (state.frame_kind != config.frame.kind) throw FrameError("state/config frame mismatch");
  const RadialProfile& u = state.profile;
  if (!(u.min_value() > 0.0))
    throw PositivityError("evolution state must be strictly positive at all nodes");

  const RadialGrid& grid = u.grid();
  const std::size_t m = grid.cell_count();
  const bool selfsim = state.frame_kind == FrameKind::selfsimilar;
  const Geometry geo = make_geometry(grid, selfsim);
  const double t_new = state.clock + dt;

  StepResult result;
  const BoundaryData bd = boundary_for(state, config, t_new);
  if (bd.extinct) {
    result.status = StepStatus::near_extinction;
    return result;
  }
  const std::size_t active = bd.closure.dirichlet ? m : m + 1;
  const int n = grid.dimension();
  const double r_max = grid.r_max();

  std::vector<double> v(active);
  for (std::size_t i = 0; i < active; ++i) v[i] = std::log(u.value(i));

  auto run_newton = [&](std::span<const double> rhs, double cdt,
                        const BoundaryClosure& closure) {
    return newton_solve(geo, v, closure, n, r_max, rhs, cdt, config);
  };

  NewtonOutcome outcome;
  if (config.scheme == TimeScheme::backward_euler) {
    outcome = run_newton(std::span<const double>(u.values().data(), active), dt, bd.closure);
  } else {
    // TR-BDF2: trapezoidal stage to t + gamma dt, then BDF2.
    const double gamma = 2.0 - std::sqrt(2.0);
    const BoundaryData bd_mid = boundary_for(state, config, state.clock + gamma * dt);
    if (bd_mid.extinct) {
      result.status = StepStatus::near_extinction;
      return result;
    }
    // Explicit part evaluated at the old time (old boundary value).
    BoundaryClosure bc_old = bd.closure;
    if (bc_old.dirichlet) bc_old.v_value = std::log(u.values().back());
    std::vector<double> gdiv(active), rhs(active);
    flux_divergence(geo, v, bc_old, n, r_max, gdiv);
    const double cdt_tr = 0.5 * gamma * dt;
    for (std::size_t i = 0; i < active; ++i) rhs[i] = u.value(i) + cdt_tr * gdiv[i];
    outcome = run_newton(rhs, cdt_tr, bd_mid.closure);
    if (outcome.converged) {
      const double a1 = 1.0 / (gamma * (2.0 - gamma));
      const double a2 = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
      const double b = (1.0 - gamma) / (2.0 - gamma);
      std::vector<double> u_star(active);
      for (std::size_t i = 0; i < active; ++i) u_star[i] = std::exp(v[i]);
      for (std::size_t i = 0; i < active; ++i) rhs[i] = a1 * u_star[i] - a2 * u.value(i);
      const int first_stage_iters = outcome.iterations;
      outcome = run_newton(rhs, b * dt, bd.closure);
      outcome.iterations += first_stage_iters;
    }
  }

  if (!outcome.converged) {
    result.status = StepStatus::newton_failed;
    result.newton_iterations = outcome.iterations;
    return result;
  }

  std::vector<double> u_new(m + 1);
  for (std::size_t i = 0; i < active; ++i) u_new[i] = std::exp(v[i]);
  std::optional<TailLaw> tail = bd.tail;
  if (bd.closure.dirichlet) {
    u_new[m] = bd.tail ? bd.tail->value(r_max) : std::exp(bd.closure.v_value);
  } else {
    // Calibrate the fitted shape to the evolved boundary node so the tail
    // law matches it exactly.
    tail = TailLaw{u_new[m] * (bd.tail->k + r_max * r_max), bd.tail->k};
  }
  double u_min = u_new[0];
  for (double x : u_new) u_min = std::min(u_min, x);
  if (u_min < config.positivity_floor) {
    result.status = StepStatus::near_extinction;
    return result;
  }

  result.status = StepStatus::ok;
  result.newton_iterations = outcome.iterations;
  result.state.emplace(EvolutionState{RadialProfile(u.grid_ptr(), std::move(u_new), tail),
                                      t_new, state.step_count + 1, state.frame_kind});
  return result;
}

StepResult step(const EvolutionState& state, const SolverConfig& config) {
  return step_dt(state, config, config.dt);
}

namespace {

struct DtController {
  double dt_max;
  double dt_cur;
  int easy_streak = 0;
  int halvings_since_accept = 0;

  explicit DtController(double dt) : dt_max(dt), dt_cur(dt) {}

  void on_failure(double dt_attempted) {
    dt_cur = 0.5 * std::min(dt_cur, dt_attempted);
    if (++halvings_since_accept > 10)
      throw NewtonError("Newton failed to converge after 10 dt halvings");
  }

  void on_accept(bool easy) {
    halvings_since_accept = 0;
    easy_streak = easy ? easy_streak + 1 : 0;
    if (easy_streak >= 5 && dt_cur < dt_max) {
      dt_cur = std::min(2.0 * dt_cur, dt_max);
      easy_streak = 0;
    }
  }
};

bool past_horizon(double clock, double horizon) {
  return clock >= horizon - 1e-12 * std::max(1.0, std::abs(horizon));
}

}  // namespace

EvolveResult evolve(EvolutionState initial, const SolverConfig& config, double horizon,
                    const std::vector<Monitor>& monitors) {
  config.validate();
  if (horizon < initial.clock) throw Error("horizon precedes the current clock");
  EvolveResult out{std::move(initial), DiagnosticsSeries{}, StopReason::horizon_reached};
  DtController ctl(config.dt);

  while (!past_horizon(out.final_state.clock, horizon)) {
    const double dt_try = std::min(ctl.dt_cur, horizon - out.final_state.clock);
    StepResult sr = step_dt(out.final_state, config, dt_try);
    if (sr.status == StepStatus::newton_failed) {
      ctl.on_failure(dt_try);
      continue;
    }
    if (sr.status == StepStatus::near_extinction) {
      out.stop = StopReason::near_extinction;
      return out;
    }
    DiagnosticsRecord rec;
    rec.clock = sr.state->clock;
    rec.dt_used = dt_try;
    for (const auto& mon : monitors) mon(out.final_state, *sr.state, dt_try, rec);
    out.diagnostics.append(rec);
    ctl.on_accept(ctl.halvings_since_accept == 0 && sr.newton_iterations <= 8);
    out.final_state = std::move(*sr.state);
  }
  out.stop = StopReason::horizon_reached;
  return out;
}

PairEvolveResult evolve_pair(EvolutionState a, EvolutionState b, const SolverConfig& config,
                             double horizon, const std::vector<PairMonitor>& monitors) {
  config.validate();
  if (horizon < a.clock || a.clock != b.clock)
    throw Error("pair evolution requires aligned clocks below the horizon");
  PairEvolveResult out{std::move(a), std::move(b), DiagnosticsSeries{},
                       StopReason::horizon_reached};
  DtController ctl(config.dt);

  while (!past_horizon(out.a.clock, horizon)) {
    const double dt_try = std::min(ctl.dt_cur, horizon - out.a.clock);
    StepResult sa = step_dt(out.a, config, dt_try);
    if (sa.status == StepStatus::newton_failed) {
      ctl.on_failure(dt_try);
      continue;
    }
    if (sa.status == StepStatus::near_extinction) {
      out.stop = StopReason::near_extinction;
      return out;
    }
    StepResult sb = step_dt(out.b, config, dt_try);
    if (sb.status == StepStatus::newton_failed) {
      ctl.on_failure(dt_try);
      continue;
    }
    if (sb.status == StepStatus::near_extinction) {
      out.stop = StopReason::near_extinction;
      return out;
    }
    DiagnosticsRecord rec;
    rec.clock = sa.state->clock;
    rec.dt_used = dt_try;
    for (const auto& mon : monitors) mon(*sa.state, *sb.state, dt_try, rec);
    out.diagnostics.append(rec);
    ctl.on_accept(ctl.halvings_since_accept == 0 &&
                  std::max(sa.newton_iterations, sb.newton_iterations) <= 8);
    out.a = std::move(*sa.state);
    out.b = std::move(*sb.state);
  }
  out.stop = StopReason::horizon_reached;
  return out;
}

RadialProfile solve_dirichlet_frozen(const RadialProfile& coeff, const RadialProfile& p,
                                     double dt, const Frame& frame, double boundary_value,
                                     double c_lower, double c_upper) {
  frame.validate();
  if (!coeff.grid().same_layout(p.grid())) throw GridError("coefficient/profile grid mismatch");
  if (!(dt > 0.0)) throw Error("dt must be positive");
  if (!(c_lower > 0.0) || !(c_upper >= c_lower))
    throw CoefficientBoundError("growth bounds require 0 < C1 <= C2");

  const RadialGrid& grid = coeff.grid();
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    const double q = 1.0 + grid.node(i) * grid.node(i);
    const double a = coeff.value(i);
    if (!(a >= c_lower * q * (1.0 - 1e-8)) || !(a <= c_upper * q * (1.0 + 1e-8)))
      throw CoefficientBoundError("coefficient violates C1(1+r^2) <= a~ <= C2(1+r^2)");
  }

  const std::size_t m = grid.cell_count();
  const Geometry geo = make_geometry(grid, frame.kind == FrameKind::selfsimilar);
  std::vector<double> lower(m, 0.0), diag(m, 0.0), upper(m, 0.0), rhs(m);

  for (std::size_t i = 0; i < m; ++i) {
    const double w = geo.volume[i];
    rhs[i] = w * p.value(i);
    diag[i] = w;
    {  // right face i
      const double k = dt * geo.area[i] / geo.h[i];
      diag[i] += k * coeff.value(i);
      const double drift = 0.5 * dt * geo.drift[i];
      diag[i] -= drift;
      const double coupling = -(k * coeff.value(i + 1) + drift);
      if (i + 1 < m)
        upper[i] = coupling;
      else
        rhs[i] -= coupling * boundary_value;
    }
    if (i > 0) {  // left face i-1
      const double k = dt * geo.area[i - 1] / geo.h[i - 1];
      diag[i] += k * coeff.value(i);
      const double drift = 0.5 * dt * geo.drift[i - 1];
      diag[i] += drift;
      lower[i] = -(k * coeff.value(i - 1) - drift);
    }
  }
  solve_tridiagonal(lower, diag, upper, rhs);

  std::vector<double> out(m + 1);
  for (std::size_t i = 0; i < m; ++i) out[i] = rhs[i];
  out[m] = boundary_value;
  RadialProfile result(p.grid_ptr(), std::move(out));
  if (p.tail()) {
    const double law = p.tail()->value(grid.r_max());
    if (std::abs(boundary_value - law) <= 1e-8 * std::abs(boundary_value) + 1e-300)
      result.set_tail(p.tail());
  }
  return result;
}

}  // namespace logdiff
