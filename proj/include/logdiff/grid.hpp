// Radial meshes on [0, r_max] with dimension-aware quadrature.
//
// Every volume integral of the artifact is reduced to
//   int_{R^N} f dx = omega_N * int_0^inf f(r) r^{N-1} dr
// for radial f. The quadrature integrates the piecewise-linear interpolant of
// the nodal values against exact per-cell moments of r^{N-1}, so it is exact
// whenever f is linear on each cell, and second order on smooth f. Far fields
// are described by an optional analytic tail law f(r) ~ c/(k + r^2); tail
// contributions are added in closed form when they converge and raise an
// error when they do not (N-dependent, matching the N = 3 vs N >= 4 split of
// the underlying theory).
#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "logdiff/errors.hpp"

namespace logdiff {

// Far-field law f(r) ~ c / (k + r^2) for r beyond the last grid node.
struct TailLaw {
  double c = 0.0;
  double k = 1.0;

  double value(double r) const { return c / (k + r * r); }
};

class RadialGrid {
 public:
  // nodes must satisfy r_0 = 0 < r_1 < ... < r_M; dimension >= 3.
  RadialGrid(std::vector<double> nodes, int dimension, double stretch = 1.0);

  const std::vector<double>& nodes() const { return nodes_; }
  double node(std::size_t i) const { return nodes_[i]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t cell_count() const { return nodes_.size() - 1; }
  int dimension() const { return dimension_; }
  double r_max() const { return nodes_.back(); }
  double stretch() const { return stretch_; }
  double spacing(std::size_t cell) const { return nodes_[cell + 1] - nodes_[cell]; }

  // Surface area of the unit sphere S^{N-1}.
  double unit_sphere_area() const { return sphere_area_; }

  // Exact moments of the weight r^{N-1} over cell i = [r_i, r_{i+1}]:
  //   moment0 = int r^{N-1} dr,   moment1 = int (r - r_i) r^{N-1} dr.
  double cell_moment0(std::size_t cell) const { return m0_[cell]; }
  double cell_moment1(std::size_t cell) const { return m1_[cell]; }

  // Lumped node volumes (hat-function moments of r^{N-1}); sum equals the
  // total weight integral over [0, r_max].
  const std::vector<double>& node_volumes() const { return node_volume_; }

  bool same_layout(const RadialGrid& other) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> m0_, m1_;
  std::vector<double> node_volume_;
  int dimension_ = 3;
  double stretch_ = 1.0;
  double sphere_area_ = 0.0;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// Geometrically stretched mesh with m_nodes cells (m_nodes+1 nodes),
// r_0 = 0, r_M = r_max, successive spacings in ratio `stretch`.
GridPtr make_grid(double r_max, int m_nodes, double stretch, int dimension);

// Nodal values of a radial function on a grid, plus an optional tail law.
// Values may be signed (differences, residuals); operations with positivity
// requirements check it themselves. When a tail is present it must match the
// boundary node to 1e-8 relative.
class RadialProfile {
 public:
  RadialProfile(GridPtr grid, std::vector<double> values,
                std::optional<TailLaw> tail = std::nullopt);

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  const std::optional<TailLaw>& tail() const { return tail_; }
  void set_tail(std::optional<TailLaw> tail);

  double min_value() const;
  double max_value() const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
  std::optional<TailLaw> tail_;
};

RadialProfile profile_from_function(GridPtr grid, const std::function<double(double)>& fn,
                                    std::optional<TailLaw> tail = std::nullopt);

// int_{R^N} f dx. A non-zero tail never converges for N >= 3 and raises
// DivergentTailError; callers integrate differences (below) or tail-free
// profiles.
double integrate_radial(const RadialProfile& f);

// Quadrature of nodal values (no tail) against the r^{N-1} weight; the
// building block shared by the difference/ball/potential integrals.
double integrate_nodal(const RadialGrid& grid, std::span<const double> values);

// int (f-g) dx or int |f-g| dx including the analytic tail correction.
// Tails must be both present or both absent; a difference of tails decays
// like r^-4 only when the c coefficients agree (else divergent); for N >= 4
// even that is non-integrable, so the tails must cancel identically.
double integrate_difference(const RadialProfile& f, const RadialProfile& g, bool absolute);

// Partial-ball version used by the growth-constant estimator: integrates the
// chosen part of (f-g) over |x| <= r_ball (no tail; r_ball <= r_max).
enum class DifferencePart { signed_part, absolute_part, positive_part };
double integrate_difference_ball(const RadialProfile& f, const RadialProfile& g,
                                 double r_ball, DifferencePart part);

// Delta f = f'' + (N-1) f'/r on the (possibly stretched) mesh; second-order
// central differences, even-symmetry expansion Delta f(0) = N f''(0) at the
// origin, one-sided at r_M. Result carries no tail.
RadialProfile radial_laplacian(const RadialProfile& f);

}  // namespace logdiff
