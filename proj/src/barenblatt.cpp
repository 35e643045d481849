#include "logdiff/barenblatt.hpp"

#include <cmath>

#include "logdiff/transform.hpp"

namespace logdiff {

namespace {

// (T-t)_+^p computed through exp/log of a positive base; the clamp is applied
// before exponentiation so roundoff t slightly above T cannot produce NaN.
double clamped_pow(double base, double p) {
  if (base <= 0.0) return 0.0;
  return std::exp(p * std::log(base));
}

}  // namespace

void BarenblattSpec::validate() const {
  if (!(k > 0.0)) throw GridError("Barenblatt parameter k must be > 0");
  if (!(T > 0.0)) throw GridError("extinction time T must be > 0");
  if (dimension < 3) throw GridError("dimension must be >= 3");
}

double barenblatt_value(double r, double t, const BarenblattSpec& spec) {
  spec.validate();
  const int n = spec.dimension;
  const double tau = spec.T - t;
  if (tau <= 0.0) return 0.0;
  const double amp = clamped_pow(tau, static_cast<double>(n) / (n - 2));
  const double scale = clamped_pow(tau, 2.0 / (n - 2));
  return 2.0 * (n - 2) * amp / (spec.k + scale * r * r);
}

double rescaled_barenblatt_value(double r, double k, int dimension) {
  return 2.0 * (dimension - 2) / (k + r * r);
}

double weight_value(double r, double alpha, double k2, int dimension) {
  return std::pow(rescaled_barenblatt_value(r, k2, dimension), alpha);
}

double weight_alpha(int dimension) { return 0.5 * (dimension - 4); }

double laplacian_weight_identity(double r, double k2, int dimension) {
  if (dimension <= 4) throw GridError("laplacian_weight_identity requires N >= 5");
  const int n = dimension;
  const double q = k2 + r * r;
  const double w = weight_value(r, weight_alpha(n), k2, n);
  return -(n - 4) * (2.0 * r * r + k2 * n) / (q * q) * w;
}

double radial_gradient_weight(double r, double k2, int dimension) {
  const int n = dimension;
  const double q = k2 + r * r;
  const double w = weight_value(r, weight_alpha(n), k2, n);
  return -(n - 4) * r * r / q * w;
}

double drift_diffusion_bound(double r, double k2, int dimension) {
  if (dimension <= 4) throw GridError("drift_diffusion_bound requires N >= 5");
  const int n = dimension;
  const double q = k2 + r * r;
  const double w = weight_value(r, weight_alpha(n), k2, n);
  return -k2 * (n - 4) * n / (2.0 * (n - 2) * q) * w;
}

RadialProfile sample_barenblatt(GridPtr grid, const BarenblattSpec& spec, double t) {
  spec.validate();
  const int n = spec.dimension;
  std::vector<double> vals(grid->node_count());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = barenblatt_value(grid->node(i), t, spec);
  std::optional<TailLaw> tail;
  const double tau = spec.T - t;
  if (tau > 0.0) {
    // B_k(r,t) = c/(k_tail + r^2) exactly, with
    // c = 2(N-2)(T-t), k_tail = k (T-t)^{-2/(N-2)}.
    tail = TailLaw{2.0 * (n - 2) * tau, spec.k * clamped_pow(tau, -2.0 / (n - 2))};
  }
  return RadialProfile(std::move(grid), std::move(vals), tail);
}

RadialProfile sample_rescaled_barenblatt(GridPtr grid, double k) {
  if (!(k > 0.0)) throw GridError("Barenblatt parameter k must be > 0");
  const int n = grid->dimension();
  std::vector<double> vals(grid->node_count());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = rescaled_barenblatt_value(grid->node(i), k, n);
  return RadialProfile(std::move(grid), std::move(vals), TailLaw{2.0 * (n - 2), k});
}

double rescale_identity_check(const BarenblattSpec& spec, double t, const RadialGrid& grid) {
  spec.validate();
  if (!(t < spec.T)) throw FrameError("rescale identity requires t < T");
  const int n = spec.dimension;
  const double tau = spec.T - t;
  const double lambda = clamped_pow(tau, 1.0 / (n - 2));

  // Sample B_k at the physical radii that map onto the given self-similar
  // nodes, transform, and compare against B~_k. No interpolation involved.
  std::vector<double> physical_nodes(grid.node_count());
  for (std::size_t i = 0; i < physical_nodes.size(); ++i)
    physical_nodes[i] = grid.node(i) / lambda;
  auto physical_grid =
      std::make_shared<RadialGrid>(std::move(physical_nodes), n, grid.stretch());
  RadialProfile u = sample_barenblatt(physical_grid, spec, t);

  Frame frame{FrameKind::physical, spec.T, n};
  auto view = to_selfsimilar(u, t, frame);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const double expect = rescaled_barenblatt_value(grid.node(i), spec.k, n);
    err = std::max(err, std::abs(view.profile.value(i) - expect));
  }
  return err;
}

RadialProfile residual_rescaled_pde(const RadialProfile& f) {
  const RadialGrid& grid = f.grid();
  const int n = grid.dimension();
  const auto& r = grid.nodes();
  const auto& u = f.values();
  for (double v : u)
    if (!(v > 0.0)) throw PositivityError("residual_rescaled_pde needs positive values");

  std::vector<double> logs(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) logs[i] = std::log(u[i]);
  RadialProfile lap = radial_laplacian(RadialProfile(f.grid_ptr(), std::move(logs)));

  // Drift term in the expanded form (1/r^{N-1}) d_r(r^N f) = N f + r f',
  // which avoids the r^{1-N} amplification of derivative error at the first
  // nodes; r f' vanishes at the origin by symmetry.
  const std::size_t m = grid.cell_count();
  std::vector<double> out(u.size());
  out[0] = lap.value(0) + static_cast<double>(n) * u[0] / (n - 2);
  for (std::size_t i = 1; i < m; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    const double fp = (-hp / (hm * (hm + hp))) * u[i - 1] +
                      ((hp - hm) / (hm * hp)) * u[i] +
                      (hm / (hp * (hm + hp))) * u[i + 1];
    out[i] = lap.value(i) + (n * u[i] + r[i] * fp) / (n - 2);
  }
  {
    const std::size_t i = m;
    const double hm2 = r[i - 1] - r[i - 2];
    const double hm1 = r[i] - r[i - 1];
    const double fp = (hm1 / (hm2 * (hm2 + hm1))) * u[i - 2] -
                      ((hm2 + hm1) / (hm2 * hm1)) * u[i - 1] +
                      ((hm2 + 2.0 * hm1) / (hm1 * (hm2 + hm1))) * u[i];
    out[i] = lap.value(i) + (n * u[i] + r[i] * fp) / (n - 2);
  }
  return RadialProfile(f.grid_ptr(), std::move(out));
}

}  // namespace logdiff
