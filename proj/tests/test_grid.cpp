#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "logdiff/barenblatt.hpp"
#include "logdiff/grid.hpp"

using namespace logdiff;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent composite-Simpson oracle on a plain function.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("make_grid produces the documented node sets") {
  auto g = make_grid(1.0, 16, 1.0, 3);
  REQUIRE(g->node_count() == 17);
  for (int i = 0; i <= 16; ++i)
    CHECK(g->node(i) == doctest::Approx(i / 16.0).epsilon(1e-14));
  CHECK(g->node(0) == 0.0);
  CHECK(g->r_max() == 1.0);

  auto gs = make_grid(10.0, 100, 1.02, 5);
  REQUIRE(gs->node_count() == 101);
  for (std::size_t i = 0; i + 1 < gs->cell_count(); ++i)
    CHECK(gs->spacing(i + 1) / gs->spacing(i) == doctest::Approx(1.02).epsilon(1e-10));
  CHECK(gs->r_max() == 10.0);

  CHECK_THROWS_AS(make_grid(1.0, 16, 1.0, 2), GridError);
  CHECK_THROWS_AS(make_grid(-1.0, 16, 1.0, 3), GridError);
  CHECK_THROWS_AS(make_grid(1.0, 8, 1.0, 3), GridError);
  CHECK_THROWS_AS(make_grid(std::nan(""), 16, 1.0, 3), GridError);
  CHECK_THROWS_AS(make_grid(1.0, 16, std::nan(""), 3), GridError);
}

TEST_CASE("quadrature is exact for f = 1 and f = r on stretched meshes") {
  for (int n : {3, 5, 7}) {
    auto g = make_grid(8.0, 64, 1.05, n);
    const double omega = g->unit_sphere_area();
    RadialProfile ones = profile_from_function(g, [](double) { return 1.0; });
    RadialProfile lin = profile_from_function(g, [](double r) { return r; });
    const double r = g->r_max();
    CHECK(integrate_radial(ones) ==
          doctest::Approx(omega * std::pow(r, n) / n).epsilon(1e-13));
    CHECK(integrate_radial(lin) ==
          doctest::Approx(omega * std::pow(r, n + 1) / (n + 1)).epsilon(1e-13));
  }
}

TEST_CASE("unit sphere areas") {
  CHECK(make_grid(1.0, 16, 1.0, 3)->unit_sphere_area() ==
        doctest::Approx(4.0 * kPi).epsilon(1e-14));
  CHECK(make_grid(1.0, 16, 1.0, 4)->unit_sphere_area() ==
        doctest::Approx(2.0 * kPi * kPi).epsilon(1e-14));
  CHECK(make_grid(1.0, 16, 1.0, 5)->unit_sphere_area() ==
        doctest::Approx(8.0 * kPi * kPi / 3.0).epsilon(1e-14));
}

TEST_CASE("integrate_radial: ball volume, zero, divergent tail") {
  auto g = make_grid(2.0, 4000, 1.0, 3);
  RadialProfile ball = profile_from_function(g, [](double r) { return r <= 1.0 ? 1.0 : 0.0; });
  CHECK(integrate_radial(ball) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-3));

  RadialProfile zero = profile_from_function(g, [](double) { return 0.0; });
  CHECK(integrate_radial(zero) == 0.0);

  RadialProfile bt = sample_rescaled_barenblatt(g, 1.0);
  CHECK_THROWS_AS(integrate_radial(bt), DivergentTailError);
}

TEST_CASE("integrate_radial converges at second order on smooth data") {
  auto value = [](int m) {
    auto g = make_grid(6.0, m, 1.0, 3);
    RadialProfile f = profile_from_function(g, [](double r) { return std::exp(-r * r); });
    return integrate_radial(f);
  };
  const double exact = std::pow(kPi, 1.5);  // Gaussian integral in R^3
  const double e1 = std::abs(value(100) - exact);
  const double e2 = std::abs(value(200) - exact);
  CHECK(e2 < e1 / 3.5);
}

TEST_CASE("integrate_difference closed form and oracle") {
  // int(B~_{k2} - B~_{k1}) dx = 4 pi^2 (sqrt(k1) - sqrt(k2)) for N = 3.
  auto g = make_grid(40.0, 4000, 1.0, 3);
  RadialProfile b1 = sample_rescaled_barenblatt(g, 1.0);
  RadialProfile b4 = sample_rescaled_barenblatt(g, 4.0);
  const double expect = 4.0 * kPi * kPi;

  CHECK(integrate_difference(b1, b1, true) == 0.0);
  const double abs_dist = integrate_difference(b1, b4, true);
  CHECK(abs_dist == doctest::Approx(expect).epsilon(1e-4));

  // Independent oracle: Simpson quadrature of the exact integrand plus the
  // analytic remainder of the r^-4 tail beyond the oracle domain.
  auto integrand = [](double r) {
    return 4.0 * kPi * r * r * (2.0 / (1.0 + r * r) - 2.0 / (4.0 + r * r));
  };
  double oracle = simpson(integrand, 0.0, 2000.0, 400000);
  oracle += 4.0 * kPi * 2.0 * 3.0 / 2000.0;  // int_R^inf 6/r^2 dr = 6/R
  CHECK(oracle == doctest::Approx(expect).epsilon(1e-5));

  // Signed orientation and antisymmetry.
  const double signed_fg = integrate_difference(b1, b4, false);
  const double signed_gf = integrate_difference(b4, b1, false);
  CHECK(signed_fg == doctest::Approx(expect).epsilon(1e-4));
  CHECK(signed_fg == doctest::Approx(-signed_gf).epsilon(1e-14));
  CHECK(std::abs(signed_fg) <= abs_dist * (1.0 + 1e-12));
}

TEST_CASE("physical-frame signed difference is independent of T") {
  const double expect = 4.0 * kPi * kPi;
  for (double T : {0.5, 1.0, 2.0}) {
    auto g = make_grid(60.0, 6000, 1.0, 3);
    RadialProfile f = sample_barenblatt(g, {1.0, T, 3}, 0.0);
    RadialProfile h = sample_barenblatt(g, {4.0, T, 3}, 0.0);
    CHECK(integrate_difference(f, h, false) == doctest::Approx(expect).epsilon(2e-4));
  }
}

TEST_CASE("tail certificates: mismatched c diverges, N >= 4 rejects k mismatch") {
  auto g5 = make_grid(20.0, 400, 1.0, 5);
  RadialProfile a = sample_rescaled_barenblatt(g5, 1.0);
  RadialProfile b = sample_rescaled_barenblatt(g5, 4.0);
  CHECK_THROWS_AS(integrate_difference(a, b, true), TailCertificateError);

  // Identical tails cancel and are certified.
  RadialProfile c = sample_rescaled_barenblatt(g5, 1.0);
  CHECK(integrate_difference(a, c, true) == 0.0);

  // Different c coefficients decay like r^-2: divergent even for N = 3.
  auto g3 = make_grid(20.0, 400, 1.0, 3);
  RadialProfile p = profile_from_function(
      g3, [](double r) { return 1.0 / (1.0 + r * r); }, TailLaw{1.0, 1.0});
  RadialProfile q = profile_from_function(
      g3, [](double r) { return 2.0 / (1.0 + r * r); }, TailLaw{2.0, 1.0});
  CHECK_THROWS_AS(integrate_difference(p, q, false), DivergentTailError);

  // One-sided tails are rejected outright.
  RadialProfile bare = profile_from_function(g3, [](double r) { return 1.0 / (1.0 + r * r); });
  CHECK_THROWS_AS(integrate_difference(p, bare, false), GridError);
}

TEST_CASE("signed/absolute difference properties on random profiles") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> amp(0.1, 2.0);
  auto g = make_grid(5.0, 64, 1.02, 3);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> fv(g->node_count()), gv(g->node_count());
    for (std::size_t i = 0; i < fv.size(); ++i) {
      fv[i] = amp(rng) * std::sin(0.7 * i) + amp(rng);
      gv[i] = amp(rng) * std::cos(0.3 * i);
    }
    RadialProfile f(g, fv), h(g, gv);
    const double s = integrate_difference(f, h, false);
    const double a = integrate_difference(f, h, true);
    CHECK(s == doctest::Approx(-integrate_difference(h, f, false)).epsilon(1e-12));
    CHECK(std::abs(s) <= a * (1.0 + 1e-12) + 1e-15);
    CHECK(a >= 0.0);
  }
}

TEST_CASE("radial_laplacian is exact on quadratics and constants") {
  for (int n : {3, 5}) {
    auto g = make_grid(4.0, 64, 1.03, n);
    RadialProfile f = profile_from_function(g, [](double r) { return r * r; });
    RadialProfile lap = radial_laplacian(f);
    for (std::size_t i = 0; i + 1 < lap.size(); ++i)
      CHECK(lap.value(i) == doctest::Approx(2.0 * n).epsilon(1e-9));

    RadialProfile one = profile_from_function(g, [](double) { return 1.0; });
    RadialProfile lap1 = radial_laplacian(one);
    for (std::size_t i = 0; i < lap1.size(); ++i)
      CHECK(std::abs(lap1.value(i)) < 1e-10);
  }
}

TEST_CASE("radial_laplacian of the weight matches the closed form at O(h^2)") {
  // f = B~_1^{1/2} on N = 5; Delta f(0) = -5 sqrt(6).
  auto lap_origin_error = [](int m) {
    auto g = make_grid(10.0, m, 1.0, 5);
    RadialProfile f =
        profile_from_function(g, [](double r) { return weight_value(r, 0.5, 1.0, 5); });
    RadialProfile lap = radial_laplacian(f);
    return std::abs(lap.value(0) - (-5.0 * std::sqrt(6.0)));
  };
  const double e1 = lap_origin_error(400);
  const double e2 = lap_origin_error(800);
  CHECK(e1 < 0.01 * 5.0 * std::sqrt(6.0));
  CHECK(e2 < e1 / 3.0);

  // Uniform agreement with the closed form over the grid.
  auto sup_error = [](int m) {
    auto g = make_grid(10.0, m, 1.0, 5);
    RadialProfile f =
        profile_from_function(g, [](double r) { return weight_value(r, 0.5, 1.0, 5); });
    RadialProfile lap = radial_laplacian(f);
    double sup = 0.0;
    for (std::size_t i = 0; i < lap.size(); ++i)
      sup = std::max(sup,
                     std::abs(lap.value(i) - laplacian_weight_identity(g->node(i), 1.0, 5)));
    return sup;
  };
  const double s1 = sup_error(400);
  const double s2 = sup_error(800);
  CHECK(s2 < s1 / 3.0);
}

TEST_CASE("profile invariants") {
  auto g = make_grid(10.0, 32, 1.0, 3);
  std::vector<double> vals(g->node_count(), 1.0);
  CHECK_THROWS_AS(RadialProfile(g, std::vector<double>(5, 1.0)), GridError);

  // Tail must match the boundary node.
  vals.back() = 2.0 / (1.0 + 100.0);
  CHECK_NOTHROW(RadialProfile(g, vals, TailLaw{2.0, 1.0}));
  CHECK_THROWS_AS(RadialProfile(g, vals, TailLaw{3.0, 1.0}), GridError);
  CHECK_THROWS_AS(RadialProfile(g, vals, TailLaw{2.0, -1.0}), GridError);
}
