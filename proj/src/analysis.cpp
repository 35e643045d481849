#include "logdiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace logdiff {

namespace {

void require_same_grid(const RadialProfile& f, const RadialProfile& g) {
  if (!f.grid().same_layout(g.grid())) throw GridError("profiles on different grids");
}

bool tails_identical(const std::optional<TailLaw>& a, const std::optional<TailLaw>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  const double cs = std::max({std::abs(a->c), std::abs(b->c), 1e-300});
  const double ks = std::max(a->k, b->k);
  return std::abs(a->c - b->c) <= 1e-9 * cs && std::abs(a->k - b->k) <= 1e-9 * ks;
}

}  // namespace

double l1_distance(const RadialProfile& f, const RadialProfile& g) {
  return integrate_difference(f, g, /*absolute=*/true);
}

double weighted_l1_distance(const RadialProfile& f, const RadialProfile& g, double k2,
                            int dimension) {
  require_same_grid(f, g);
  if (dimension < 5) throw GridError("weighted L1 distance requires N >= 5");
  if (f.grid().dimension() != dimension) throw GridError("profile dimension mismatch");
  if (!(k2 > 0.0)) throw GridError("weight parameter k2 must be > 0");

  const bool tf = f.tail().has_value(), tg = g.tail().has_value();
  if (tf != tg) throw GridError("tails must be both present or both absent");
  if (tf && !tails_identical(f.tail(), g.tail()))
    throw TailCertificateError(
        "weighted tail of a difference of distinct c/(k+r^2) laws is "
        "log-divergent and cannot be certified below 1e-8 of the interior");

  const RadialGrid& grid = f.grid();
  const double alpha = weight_alpha(dimension);
  std::vector<double> vals(f.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = std::abs(f.value(i) - g.value(i)) *
              weight_value(grid.node(i), alpha, k2, dimension);
  return integrate_nodal(grid, vals);
}

double mass_mismatch_at(const RadialProfile& u0, double T, int dimension, double k) {
  BarenblattSpec spec{k, T, dimension};
  RadialProfile bk = sample_barenblatt(u0.grid_ptr(), spec, 0.0);
  return integrate_difference(u0, bk, /*absolute=*/false);
}

double match_k0(const RadialProfile& u0, double T, int dimension,
                std::pair<double, double> bracket) {
  if (dimension != 3)
    throw GridError("mass matching requires N = 3 (difference not integrable otherwise)");
  if (u0.grid().dimension() != 3) throw GridError("profile dimension mismatch");
  double lo = bracket.first, hi = bracket.second;
  if (!(lo > 0.0) || !(hi > 0.0)) throw BracketError("bracket must be positive");
  if (lo > hi) std::swap(lo, hi);

  // f(k) = int(u0 - B_k) is continuous and increasing in k.
  auto f = [&](double k) { return mass_mismatch_at(u0, T, dimension, k); };
  double flo = f(lo), fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0)
    throw BracketError("bracket does not straddle the mass-matching root");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  const double scale = integrate_nodal(u0.grid(), u0.values());
  const double tol = 1e-8 * std::abs(scale);
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) < tol && hi - lo < 1e-9 * std::max(1.0, mid)) return mid;
    if (fm < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * std::max(1.0, mid)) break;
  }
  const double fm = f(mid);
  if (std::abs(fm) >= tol)
    throw Error("mass-matching bisection failed to reach tolerance");
  return mid;
}

namespace {

// Exact cumulative integrals of the piecewise-linear interpolant against
// r^{N-1}: inner[i] = int_0^{r_i} f r^{N-1} dr.
std::vector<double> cumulative_mass(const RadialGrid& grid, const std::vector<double>& f) {
  std::vector<double> inner(grid.node_count(), 0.0);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const double h = grid.spacing(i);
    inner[i + 1] = inner[i] + f[i] * grid.cell_moment0(i) +
                   (f[i + 1] - f[i]) * grid.cell_moment1(i) / h;
  }
  return inner;
}

// int_a^b rho^{1-N} m(rho) drho for the exact per-cell polynomial
// m(rho) = C0 + C1 rho^N + C2 rho^{N+1} built from linear f on [a,b].
double outer_cell_integral(int n, double a, double b, double m_a, double fa, double fb) {
  const double h = b - a;
  const double beta = (fb - fa) / h;
  const double c1 = (fa - beta * a) / n;
  const double c2 = beta / (n + 1);
  const double pa_n = std::pow(a, n);
  const double c0 = m_a - c1 * pa_n - c2 * pa_n * a;
  double out = c1 * 0.5 * (b * b - a * a) + c2 * (b * b * b - a * a * a) / 3.0;
  // m(0) = 0 makes c0 vanish identically on the first cell, where the
  // rho^{2-N} antiderivative would be singular.
  if (a > 0.0) out += c0 * (std::pow(b, 2 - n) - std::pow(a, 2 - n)) / (2.0 - n);
  return out;
}

}  // namespace

PotentialProfile newtonian_potential_radial(const RadialProfile& f) {
  const RadialGrid& grid = f.grid();
  const int n = grid.dimension();
  for (double v : f.values()) {
    if (std::isnan(v)) throw GridError("NaN in source");
    if (v < 0.0) throw PositivityError("Newtonian potential needs a non-negative source");
  }
  if (f.tail() && f.tail()->c != 0.0)
    throw DivergentTailError("infinite-mass source: tail ~ c/r^2 has divergent mass");

  const auto& vals = f.values();
  std::vector<double> inner = cumulative_mass(grid, vals);
  const double total = inner.back();

  // Suffix sums of the outer integral, plus the analytic part beyond r_max
  // where the enclosed mass is constant.
  std::vector<double> z(grid.node_count(), 0.0);
  double acc = total * std::pow(grid.r_max(), 2 - n) / (n - 2);
  z.back() = acc;
  for (std::size_t i = grid.cell_count(); i-- > 0;) {
    acc += outer_cell_integral(n, grid.node(i), grid.node(i + 1), inner[i], vals[i],
                               vals[i + 1]);
    z[i] = acc;
  }
  return PotentialProfile{RadialProfile(f.grid_ptr(), std::move(z)),
                          PotentialFlavor::newtonian, 0.0};
}

PotentialProfile green_potential_radial(const RadialProfile& psi, double R) {
  const RadialGrid& grid = psi.grid();
  const int n = grid.dimension();
  if (!(R > 0.0) || R > grid.r_max() * (1.0 + 1e-12))
    throw GridError("ball radius R exceeds grid coverage");
  for (double v : psi.values())
    if (std::isnan(v)) throw GridError("NaN in source");

  const auto& vals = psi.values();
  std::vector<double> inner = cumulative_mass(grid, vals);
  std::vector<double> g(grid.node_count(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const double a = grid.node(i);
    double b = grid.node(i + 1);
    double fb = vals[i + 1];
    if (a >= R) {
      g[i + 1] = acc;
      continue;
    }
    if (b > R) {
      fb = vals[i] + (vals[i + 1] - vals[i]) * (R - a) / (b - a);
      b = R;
    }
    acc += outer_cell_integral(n, a, b, inner[i], vals[i], fb);
    g[i + 1] = acc;
  }
  return PotentialProfile{RadialProfile(psi.grid_ptr(), std::move(g)),
                          PotentialFlavor::green_ball, R};
}

RadialProfile mean_value_coefficient(const RadialProfile& u, const RadialProfile& v) {
  require_same_grid(u, v);
  std::vector<double> a(u.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = u.value(i), y = v.value(i);
    if (!(x > 0.0) || !(y > 0.0))
      throw PositivityError("mean-value coefficient needs positive profiles");
    const double d = x - y;
    if (std::abs(d) < 1e-12 * x) {
      a[i] = 1.0 / x;
    } else {
      a[i] = std::log1p(d / y) / d;
    }
  }
  return RadialProfile(u.grid_ptr(), std::move(a));
}

namespace {

std::vector<std::pair<double, double>> finite_column(const DiagnosticsSeries& series,
                                                     ContractionMode mode) {
  std::vector<std::pair<double, double>> col;
  for (const auto& rec : series.records()) {
    const double v = mode == ContractionMode::plain_l1 ? rec.l1_dist : rec.weighted_l1_dist;
    if (std::isfinite(v)) col.emplace_back(rec.clock, v);
  }
  return col;
}

}  // namespace

ContractionReport check_contraction(const DiagnosticsSeries& series, ContractionMode mode) {
  if (series.empty()) throw Error("empty diagnostics series");
  const auto col = finite_column(series, mode);
  if (col.empty()) throw Error("diagnostics series lacks the requested distance column");

  ContractionReport report;
  for (std::size_t i = 1; i < col.size(); ++i) {
    const double prev = col[i - 1].second, next = col[i].second;
    if (prev > 0.0) report.worst_step_ratio = std::max(report.worst_step_ratio, next / prev);
    const bool increased = next > prev * (1.0 + 1e-8) + 1e-300;
    if (increased) {
      ++report.increasing_steps;
      if (mode == ContractionMode::plain_l1 && report.passed) {
        report.passed = false;
        report.first_violation = i;
      }
    }
  }

  // Strict decrease between checkpoints one clock unit apart.
  auto value_at_or_after = [&](double c) -> const std::pair<double, double>* {
    for (const auto& p : col)
      if (p.first >= c - 1e-9) return &p;
    return nullptr;
  };
  const double c_begin = std::ceil(col.front().first - 1e-9);
  const double c_end = col.back().first;
  for (double c = c_begin; c + 1.0 <= c_end + 1e-9; c += 1.0) {
    const auto* p0 = value_at_or_after(c);
    const auto* p1 = value_at_or_after(c + 1.0);
    if (!p0 || !p1 || p1 == p0) continue;
    const double ratio = p0->second > 0.0
                             ? p1->second / p0->second
                             : (p1->second > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    report.checkpoint_ratios.emplace_back(c, ratio);
    if (!(p1->second < p0->second) && p0->second > 0.0)
      report.strict_decrease_at_checkpoints = false;
    if (p0->second == 0.0 && p1->second > 0.0) report.strict_decrease_at_checkpoints = false;
  }

  if (mode == ContractionMode::weighted_l1) {
    double best = 0.0;
    for (std::size_t i = 1; i < col.size(); ++i) {
      const double ds = col[i].first - col.front().first;
      if (ds > 0.0) best = std::max(best, (col[i].second - col.front().second) / ds);
    }
    report.fitted_slack_slope = best;
    report.passed = report.strict_decrease_at_checkpoints;
  }
  return report;
}

double check_aronson_benilan(const EvolutionState& prev, const EvolutionState& next) {
  if (prev.frame_kind != FrameKind::physical || next.frame_kind != FrameKind::physical)
    throw FrameError("Aronson-Benilan check applies in the physical frame");
  if (!(prev.clock > 0.0) || !(next.clock > prev.clock))
    throw FrameError("Aronson-Benilan check needs 0 < t_prev < t_next");
  require_same_grid(prev.profile, next.profile);
  const double dt = next.clock - prev.clock;
  double worst = 0.0;
  for (std::size_t i = 0; i < next.profile.size(); ++i) {
    const double rate = (next.profile.value(i) - prev.profile.value(i)) / dt;
    worst = std::max(worst, rate - next.profile.value(i) / next.clock);
  }
  return std::max(worst, 0.0);
}

EnvelopeReport check_envelope(const std::vector<std::pair<double, RadialProfile>>& series,
                              double r0, double f_l1) {
  EnvelopeReport report;
  for (const auto& [s, prof] : series) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const RadialGrid& grid = prof.grid();
    for (std::size_t i = 0; i < prof.size(); ++i) {
      const double r = grid.node(i);
      if (r < r0) continue;
      const double val = prof.value(i) * (1.0 + r * r);
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
    if (!(lo > 0.0)) report.bounded = false;
    report.clocks.push_back(s);
    report.lower_values.push_back(lo);
    report.upper_values.push_back(hi);
  }
  if (!report.bounded || report.clocks.empty()) return report;

  const std::size_t n = report.clocks.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(report.clocks[i]) * f_l1;
  double c3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[j] - x[i];
      if (!(dx > 0.0)) continue;
      c3 = std::max(c3, (std::log(report.lower_values[i]) -
                         std::log(report.lower_values[j])) / dx);
      c3 = std::max(c3, (std::log(report.upper_values[j]) -
                         std::log(report.upper_values[i])) / dx);
    }
  }
  report.c3 = c3;
  double log_c1 = std::numeric_limits<double>::infinity();
  double log_c2 = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_c1 = std::min(log_c1, std::log(report.lower_values[i]) + c3 * x[i]);
    log_c2 = std::max(log_c2, std::log(report.upper_values[i]) - c3 * x[i]);
  }
  report.c1 = std::exp(log_c1);
  report.c2 = std::exp(log_c2);
  return report;
}

double estimate_growth_constant(const std::vector<std::pair<double, RadialProfile>>& u_series,
                                const std::vector<std::pair<double, RadialProfile>>& v_series,
                                std::span<const double> radii, double delta, double T,
                                double barrier_k) {
  if (u_series.empty() || u_series.size() != v_series.size())
    throw Error("growth estimator needs aligned non-empty series");
  if (radii.empty()) throw Error("growth estimator needs at least one radius");
  const int n = u_series.front().second.grid().dimension();
  const double r_min_admissible =
      std::sqrt(barrier_k) * std::exp(-std::log(delta) / (n - 2));
  const double r_max = u_series.front().second.grid().r_max();
  for (double r : radii)
    if (2.0 * r > r_max * (1.0 + 1e-12)) throw GridError("R-range exceeds domain");

  double fitted = 0.0;
  bool any = false;
  for (std::size_t idx = 0; idx < u_series.size(); ++idx) {
    const double t = u_series[idx].first;
    if (t > T - delta + 1e-12) continue;
    for (double r : radii) {
      if (r < r_min_admissible) continue;
      any = true;
      const double lhs = std::sqrt(std::max(
          0.0, integrate_difference_ball(u_series[idx].second, v_series[idx].second, r,
                                         DifferencePart::positive_part)));
      const double rhs0 = std::sqrt(std::max(
          0.0, integrate_difference_ball(u_series.front().second, v_series.front().second,
                                         2.0 * r, DifferencePart::positive_part)));
      const double denom = std::pow(r, 0.5 * (n - 2)) * std::sqrt(T);
      fitted = std::max(fitted, (lhs - rhs0) / denom);
    }
  }
  if (!any) throw Error("no admissible (R, t) pairs for the growth estimator");
  return std::max(fitted, 0.0);
}

// --- monitors ---------------------------------------------------------------

Monitor make_l1_monitor(RadialProfile reference) {
  return [ref = std::move(reference)](const EvolutionState&, const EvolutionState& next,
                                      double, DiagnosticsRecord& rec) {
    rec.l1_dist = l1_distance(next.profile, ref);
  };
}

Monitor make_weighted_l1_monitor(RadialProfile reference, double k2) {
  return [ref = std::move(reference), k2](const EvolutionState&, const EvolutionState& next,
                                          double, DiagnosticsRecord& rec) {
    rec.weighted_l1_dist =
        weighted_l1_distance(next.profile, ref, k2, ref.grid().dimension());
  };
}

Monitor make_sup_monitor(RadialProfile reference) {
  return [ref = std::move(reference)](const EvolutionState&, const EvolutionState& next,
                                      double, DiagnosticsRecord& rec) {
    double sup = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
      sup = std::max(sup, std::abs(next.profile.value(i) - ref.value(i)));
    rec.sup_dist = sup;
  };
}

Monitor make_mass_monitor(RadialProfile reference) {
  return [ref = std::move(reference)](const EvolutionState&, const EvolutionState& next,
                                      double, DiagnosticsRecord& rec) {
    rec.mass_mismatch = integrate_difference(next.profile, ref, /*absolute=*/false);
  };
}

Monitor make_ab_monitor() {
  return [](const EvolutionState& prev, const EvolutionState& next, double,
            DiagnosticsRecord& rec) {
    if (prev.clock > 0.0) rec.ab_violation = check_aronson_benilan(prev, next);
  };
}

namespace {

void sandwich_margins(const RadialProfile& u, const std::vector<double>& lower,
                      const std::vector<double>& upper, double fatal, DiagnosticsRecord& rec) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    lo = std::min(lo, u.value(i) - lower[i]);
    hi = std::min(hi, upper[i] - u.value(i));
  }
  rec.sandwich_margin_low = lo;
  rec.sandwich_margin_high = hi;
  if (lo < fatal || hi < fatal)
    throw MonitorViolationError("sandwich margin fell below the fatal threshold");
}

}  // namespace

Monitor make_sandwich_monitor(GridPtr grid, double k1, double k2, double fatal_rel) {
  if (!(k1 > k2) || !(k2 > 0.0)) throw GridError("sandwich requires k1 > k2 > 0");
  const int n = grid->dimension();
  std::vector<double> lower(grid->node_count()), upper(grid->node_count());
  for (std::size_t i = 0; i < lower.size(); ++i) {
    lower[i] = rescaled_barenblatt_value(grid->node(i), k1, n);
    upper[i] = rescaled_barenblatt_value(grid->node(i), k2, n);
  }
  const double fatal = fatal_rel * rescaled_barenblatt_value(0.0, k2, n);
  return [lower = std::move(lower), upper = std::move(upper), fatal](
             const EvolutionState&, const EvolutionState& next, double,
             DiagnosticsRecord& rec) { sandwich_margins(next.profile, lower, upper, fatal, rec); };
}

Monitor make_sandwich_monitor_physical(BarenblattSpec lower, BarenblattSpec upper,
                                       double fatal_rel) {
  lower.validate();
  upper.validate();
  if (!(lower.k > upper.k)) throw GridError("lower barrier needs the larger k");
  return [lower, upper, fatal_rel](const EvolutionState&, const EvolutionState& next,
                                   double, DiagnosticsRecord& rec) {
    const RadialGrid& grid = next.profile.grid();
    std::vector<double> lo(grid.node_count()), hi(grid.node_count());
    for (std::size_t i = 0; i < lo.size(); ++i) {
      lo[i] = barenblatt_value(grid.node(i), next.clock, lower);
      hi[i] = barenblatt_value(grid.node(i), next.clock, upper);
    }
    const double fatal = fatal_rel * barenblatt_value(0.0, next.clock, upper);
    sandwich_margins(next.profile, lo, hi, fatal, rec);
  };
}

Monitor make_coeff_bound_monitor(RadialProfile reference, double k1, double k2) {
  if (!(k1 > k2) || !(k2 > 0.0)) throw GridError("coefficient bounds require k1 > k2 > 0");
  return [ref = std::move(reference), k1, k2](const EvolutionState&,
                                              const EvolutionState& next, double,
                                              DiagnosticsRecord& rec) {
    const RadialProfile a = mean_value_coefficient(next.profile, ref);
    const RadialGrid& grid = ref.grid();
    const int n = grid.dimension();
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double q = grid.node(i) * grid.node(i);
      const double lo = (k2 + q) / (2.0 * (n - 2));
      const double hi = (k1 + q) / (2.0 * (n - 2));
      margin = std::min({margin, a.value(i) - lo, hi - a.value(i)});
    }
    rec.coeff_bound_margin = margin;
  };
}

Monitor make_snapshot_monitor(std::vector<std::pair<double, RadialProfile>>* sink,
                              double spacing) {
  if (!sink) throw Error("snapshot monitor needs a sink");
  auto next_at = std::make_shared<double>(-std::numeric_limits<double>::infinity());
  return [sink, spacing, next_at](const EvolutionState& prev, const EvolutionState& next,
                                  double, DiagnosticsRecord&) {
    if (*next_at == -std::numeric_limits<double>::infinity())
      *next_at = prev.clock + spacing;
    if (next.clock + 1e-12 >= *next_at) {
      sink->emplace_back(next.clock, next.profile);
      while (*next_at <= next.clock + 1e-12) *next_at += spacing;
    }
  };
}

PairMonitor make_pair_l1_monitor() {
  return [](const EvolutionState& a, const EvolutionState& b, double,
            DiagnosticsRecord& rec) { rec.l1_dist = l1_distance(a.profile, b.profile); };
}

PairMonitor make_pair_weighted_l1_monitor(double k2) {
  return [k2](const EvolutionState& a, const EvolutionState& b, double,
              DiagnosticsRecord& rec) {
    rec.weighted_l1_dist =
        weighted_l1_distance(a.profile, b.profile, k2, a.profile.grid().dimension());
  };
}

PairMonitor make_pair_coeff_bound_monitor(double k1, double k2) {
  return [k1, k2](const EvolutionState& a, const EvolutionState& b, double,
                  DiagnosticsRecord& rec) {
    const RadialProfile coeff = mean_value_coefficient(a.profile, b.profile);
    const RadialGrid& grid = a.profile.grid();
    const int n = grid.dimension();
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      const double q = grid.node(i) * grid.node(i);
      margin = std::min({margin, coeff.value(i) - (k2 + q) / (2.0 * (n - 2)),
                         (k1 + q) / (2.0 * (n - 2)) - coeff.value(i)});
    }
    rec.coeff_bound_margin = margin;
  };
}

PairMonitor on_state_a(Monitor monitor) {
  return [m = std::move(monitor)](const EvolutionState& a, const EvolutionState&,
                                  double dt, DiagnosticsRecord& rec) { m(a, a, dt, rec); };
}

}  // namespace logdiff
