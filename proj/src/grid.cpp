#include "logdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace logdiff {

namespace {

// Power sum a^{n-1} + a^{n-2} b + ... + b^{n-1}, so that
// b^n - a^n = (b - a) * power_sum(a, b, n) without cancellation.
double power_sum(double a, double b, int n) {
  double sum = 0.0;
  double pa = 1.0;  // a^j
  for (int j = 0; j < n; ++j) {
    double pb = 1.0;  // b^{n-1-j}
    for (int m = 0; m < n - 1 - j; ++m) pb *= b;
    sum += pa * pb;
    pa *= a;
  }
  return sum;
}

void check_finite(double x, const char* name) {
  if (!std::isfinite(x)) throw GridError(std::string("non-finite argument: ") + name);
}

// Closed-form tail of a signed difference of two laws with common c:
//   omega_3 * integral_R^inf [c/(kf+r^2) - c/(kg+r^2)] r^2 dr
//     = omega_3 * c * (sqrt(kg) atan(sqrt(kg)/R) - sqrt(kf) atan(sqrt(kf)/R)).
double tail_difference_n3(double c, double kf, double kg, double r_start) {
  const double a = std::sqrt(kf);
  const double b = std::sqrt(kg);
  return c * (b * std::atan2(b, r_start) - a * std::atan2(a, r_start));
}

}  // namespace

RadialGrid::RadialGrid(std::vector<double> nodes, int dimension, double stretch)
    : nodes_(std::move(nodes)), dimension_(dimension), stretch_(stretch) {
  if (dimension_ < 3) throw GridError("dimension must be >= 3");
  if (nodes_.size() < 2) throw GridError("grid needs at least 2 nodes");
  if (nodes_.front() != 0.0) throw GridError("first node must be exactly 0");
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    if (!(nodes_[i] < nodes_[i + 1])) throw GridError("nodes must be strictly increasing");
    check_finite(nodes_[i + 1], "node");
  }
  const int n = dimension_;
  sphere_area_ = 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);

  const std::size_t cells = nodes_.size() - 1;
  m0_.resize(cells);
  m1_.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    const double a = nodes_[i];
    const double b = nodes_[i + 1];
    const double h = b - a;
    m0_[i] = h * power_sum(a, b, n) / n;
    m1_[i] = h * power_sum(a, b, n + 1) / (n + 1) - a * m0_[i];
  }
  node_volume_.assign(nodes_.size(), 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    node_volume_[i] += m0_[i] - m1_[i] / h;
    node_volume_[i + 1] += m1_[i] / h;
  }
}

bool RadialGrid::same_layout(const RadialGrid& other) const {
  if (this == &other) return true;
  return dimension_ == other.dimension_ && nodes_ == other.nodes_;
}

GridPtr make_grid(double r_max, int m_nodes, double stretch, int dimension) {
  check_finite(r_max, "r_max");
  check_finite(stretch, "stretch");
  if (!(r_max > 0.0)) throw GridError("r_max must be positive");
  if (m_nodes < 16) throw GridError("m_nodes must be >= 16");
  if (!(stretch >= 1.0)) throw GridError("stretch must be >= 1");
  if (dimension < 3) throw GridError("dimension must be >= 3");

  std::vector<double> nodes(static_cast<std::size_t>(m_nodes) + 1);
  nodes[0] = 0.0;
  if (stretch == 1.0) {
    for (int i = 1; i <= m_nodes; ++i)
      nodes[i] = r_max * static_cast<double>(i) / m_nodes;
  } else {
    // h_i = h_0 * stretch^i with sum h_i = r_max.
    const double h0 = r_max * (stretch - 1.0) / (std::pow(stretch, m_nodes) - 1.0);
    double h = h0;
    for (int i = 1; i <= m_nodes; ++i) {
      nodes[i] = nodes[i - 1] + h;
      h *= stretch;
    }
  }
  nodes.back() = r_max;
  return std::make_shared<RadialGrid>(std::move(nodes), dimension, stretch);
}

RadialProfile::RadialProfile(GridPtr grid, std::vector<double> values,
                             std::optional<TailLaw> tail)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw GridError("profile needs a grid");
  if (values_.size() != grid_->node_count())
    throw GridError("profile value count does not match grid node count");
  for (double v : values_)
    if (std::isnan(v)) throw GridError("NaN in profile values");
  set_tail(std::move(tail));
}

void RadialProfile::set_tail(std::optional<TailLaw> tail) {
  if (tail) {
    if (tail->c < 0.0 || !(tail->k > 0.0))
      throw GridError("tail law requires c >= 0 and k > 0");
    const double boundary = values_.back();
    const double law = tail->value(grid_->r_max());
    if (std::abs(boundary - law) > 1e-8 * std::abs(boundary) + 1e-300)
      throw GridError("tail law does not match the boundary node");
  }
  tail_ = std::move(tail);
}

double RadialProfile::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

double RadialProfile::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

RadialProfile profile_from_function(GridPtr grid, const std::function<double(double)>& fn,
                                    std::optional<TailLaw> tail) {
  std::vector<double> vals(grid->node_count());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = fn(grid->node(i));
  return RadialProfile(std::move(grid), std::move(vals), std::move(tail));
}

double integrate_nodal(const RadialGrid& grid, std::span<const double> values) {
  if (values.size() != grid.node_count())
    throw GridError("value count does not match grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const double h = grid.spacing(i);
    sum += values[i] * grid.cell_moment0(i) + (values[i + 1] - values[i]) * grid.cell_moment1(i) / h;
  }
  return grid.unit_sphere_area() * sum;
}

double integrate_radial(const RadialProfile& f) {
  for (double v : f.values())
    if (std::isnan(v)) throw GridError("NaN in integrand");
  if (f.tail() && f.tail()->c != 0.0)
    throw DivergentTailError(
        "tail ~ c/r^2 gives integrand ~ r^{N-3}: divergent for N >= 3");
  return integrate_nodal(f.grid(), f.values());
}

namespace {

// Integral of the chosen part of the linear interpolant of d over the cells
// of `grid` up to radius r_stop (r_stop <= r_max), weighted by r^{N-1}.
// Splits cells at sign changes so the absolute/positive parts are exact for
// the piecewise-linear model.
double integrate_part(const RadialGrid& grid, const std::vector<double>& d,
                      double r_stop, DifferencePart part) {
  const int n = grid.dimension();
  auto piece = [&](double a, double b, double da, double db) -> double {
    // integral over [a,b] of (da + (db-da)(r-a)/(b-a)) r^{n-1} dr
    const double h = b - a;
    if (h <= 0.0) return 0.0;
    const double mom0 = h * power_sum(a, b, n) / n;
    const double mom0_next = h * power_sum(a, b, n + 1) / (n + 1);
    const double mom1 = mom0_next - a * mom0;
    return da * mom0 + (db - da) * mom1 / h;
  };
  auto mapped = [&](double x) {
    switch (part) {
      case DifferencePart::signed_part: return x;
      case DifferencePart::absolute_part: return std::abs(x);
      case DifferencePart::positive_part: return std::max(x, 0.0);
    }
    return x;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    double a = grid.node(i), b = grid.node(i + 1);
    if (a >= r_stop) break;
    double da = d[i], db = d[i + 1];
    if (b > r_stop) {
      db = da + (db - da) * (r_stop - a) / (b - a);
      b = r_stop;
    }
    if (part == DifferencePart::signed_part || da * db >= 0.0) {
      sum += piece(a, b, mapped(da), mapped(db));
    } else {
      const double rc = a + (b - a) * da / (da - db);  // sign change
      sum += piece(a, rc, mapped(da), 0.0) + piece(rc, b, 0.0, mapped(db));
    }
  }
  return grid.unit_sphere_area() * sum;
}

}  // namespace

double integrate_difference(const RadialProfile& f, const RadialProfile& g, bool absolute) {
  if (!f.grid().same_layout(g.grid())) throw GridError("profiles on different grids");
  const bool tf = f.tail().has_value(), tg = g.tail().has_value();
  if (tf != tg) throw GridError("tails must be both present or both absent");

  const RadialGrid& grid = f.grid();
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = f.value(i) - g.value(i);
    if (std::isnan(d[i])) throw GridError("NaN in integrand");
  }
  double interior = integrate_part(grid, d, grid.r_max(),
                                   absolute ? DifferencePart::absolute_part
                                            : DifferencePart::signed_part);

  double tail_term = 0.0;
  if (tf) {
    const TailLaw& a = *f.tail();
    const TailLaw& b = *g.tail();
    const double cscale = std::max({std::abs(a.c), std::abs(b.c), 1e-300});
    if (std::abs(a.c - b.c) > 1e-9 * cscale)
      throw DivergentTailError(
          "tail difference decays like r^-2: divergent for N >= 3");
    const double kscale = std::max(a.k, b.k);
    const bool tails_cancel = std::abs(a.k - b.k) <= 1e-9 * kscale;
    if (!tails_cancel && grid.dimension() >= 4)
      throw TailCertificateError(
          "difference tail ~ r^-4 is not integrable for N >= 4 and cannot be "
          "certified below 1e-8 of the interior part");
    if (!tails_cancel) {
      const double c = 0.5 * (a.c + b.c);
      tail_term = grid.unit_sphere_area() * tail_difference_n3(c, a.k, b.k, grid.r_max());
      if (absolute) tail_term = std::abs(tail_term);
    }
  }
  return interior + tail_term;
}

double integrate_difference_ball(const RadialProfile& f, const RadialProfile& g,
                                 double r_ball, DifferencePart part) {
  if (!f.grid().same_layout(g.grid())) throw GridError("profiles on different grids");
  if (!(r_ball > 0.0) || r_ball > f.grid().r_max() * (1.0 + 1e-12))
    throw GridError("ball radius outside grid coverage");
  std::vector<double> d(f.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = f.value(i) - g.value(i);
  return integrate_part(f.grid(), d, std::min(r_ball, f.grid().r_max()), part);
}

RadialProfile radial_laplacian(const RadialProfile& f) {
  const RadialGrid& grid = f.grid();
  const std::size_t m = grid.cell_count();
  if (grid.node_count() < 4) throw GridError("laplacian needs at least 4 nodes");
  const int n = grid.dimension();
  const auto& r = grid.nodes();
  const auto& u = f.values();
  std::vector<double> out(f.size());

  // Origin: even symmetry gives Delta f(0) = N f''(0), f''(0) = 2(f_1-f_0)/h^2.
  {
    const double h = r[1] - r[0];
    out[0] = n * 2.0 * (u[1] - u[0]) / (h * h);
  }
  for (std::size_t i = 1; i < m; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    const double fpp = 2.0 * (u[i - 1] * hp - u[i] * (hm + hp) + u[i + 1] * hm) /
                       (hm * hp * (hm + hp));
    const double fp = (-hp / (hm * (hm + hp))) * u[i - 1] +
                      ((hp - hm) / (hm * hp)) * u[i] +
                      (hm / (hp * (hm + hp))) * u[i + 1];
    out[i] = fpp + (n - 1) * fp / r[i];
  }
  // Boundary: one-sided 4-point (exact on cubics) for f'' and 3-point for f'.
  {
    const std::size_t i = m;
    const double x0 = r[i - 3], x1 = r[i - 2], x2 = r[i - 1], x3 = r[i];
    // Lagrange second-derivative weights at x3.
    auto w2 = [&](double xj, double xa, double xb, double xc) {
      // second derivative at x3 of the Lagrange basis for node xj
      const double denom = (xj - xa) * (xj - xb) * (xj - xc);
      return 2.0 * ((x3 - xa) + (x3 - xb) + (x3 - xc)) / denom;
    };
    const double fpp = w2(x0, x1, x2, x3) * u[i - 3] + w2(x1, x0, x2, x3) * u[i - 2] +
                       w2(x2, x0, x1, x3) * u[i - 1] + w2(x3, x0, x1, x2) * u[i];
    const double hm2 = x2 - x1, hm1 = x3 - x2;
    const double fp = (hm1 / (hm2 * (hm2 + hm1))) * u[i - 2] -
                      ((hm2 + hm1) / (hm2 * hm1)) * u[i - 1] +
                      ((hm2 + 2.0 * hm1) / (hm1 * (hm2 + hm1))) * u[i];
    out[i] = fpp + (n - 1) * fp / r[i];
  }
  return RadialProfile(f.grid_ptr(), std::move(out));
}

}  // namespace logdiff
