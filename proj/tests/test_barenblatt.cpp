#include <cmath>
#include <random>

#include "doctest.h"
#include "logdiff/barenblatt.hpp"
#include "logdiff/grid.hpp"

using namespace logdiff;

TEST_CASE("barenblatt_value direct substitutions") {
  CHECK(barenblatt_value(0.0, 0.0, {1.0, 1.0, 3}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(barenblatt_value(1.0, 0.0, {1.0, 1.0, 5}) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(barenblatt_value(0.7, 1.0, {1.0, 1.0, 3}) == 0.0);   // t = T
  CHECK(barenblatt_value(0.7, 2.0, {3.0, 1.0, 7}) == 0.0);   // t > T
}

TEST_CASE("barenblatt_value is continuous across extinction and decreasing in k") {
  const BarenblattSpec spec{2.0, 1.0, 5};
  const double just_before = barenblatt_value(1.3, 1.0 - 1e-13, spec);
  CHECK(just_before < 1e-12);
  CHECK(barenblatt_value(1.3, 1.0, spec) == 0.0);

  std::mt19937 rng(777);
  std::uniform_real_distribution<double> kdist(0.2, 6.0), rdist(0.0, 8.0), tdist(0.0, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const double k1 = kdist(rng), k2 = kdist(rng);
    const double r = rdist(rng), t = tdist(rng);
    if (k1 == k2) continue;
    const double lo = std::max(k1, k2), hi = std::min(k1, k2);
    CHECK(barenblatt_value(r, t, {lo, 1.0, 3}) < barenblatt_value(r, t, {hi, 1.0, 3}));
  }
}

TEST_CASE("rescaled_barenblatt_value") {
  CHECK(rescaled_barenblatt_value(0.0, 2.0, 3) == doctest::Approx(1.0));
  CHECK(rescaled_barenblatt_value(1.0, 1.0, 5) == doctest::Approx(3.0));
  double prev = rescaled_barenblatt_value(0.0, 1.0, 3);
  for (double r = 0.5; r < 50.0; r += 0.5) {
    const double cur = rescaled_barenblatt_value(r, 1.0, 3);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("weight_value substitutions") {
  CHECK(weight_value(0.0, 0.5, 1.0, 5) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-14));
  CHECK(weight_value(0.0, 1.7, 2.0 * (7 - 2), 7) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(weight_value(3.0, 1.0, 1.0, 5) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("rescale identity holds to 1e-12 on randomized tuples") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> kdist(0.3, 5.0), Tdist(0.3, 3.0);
  std::uniform_int_distribution<int> ndist(0, 4);
  const int dims[] = {3, 5, 6, 7, 9};
  auto grid = make_grid(15.0, 64, 1.0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = dims[ndist(rng)];
    const double k = kdist(rng);
    const double T = Tdist(rng);
    std::uniform_real_distribution<double> tdist(0.0, T * 0.999);
    const double t = tdist(rng);
    auto g = make_grid(15.0, 64, 1.0, n);
    CHECK(rescale_identity_check({k, T, n}, t, *g) <= 1e-12);
  }
  // Uniformly in t, including right next to extinction (no overflow).
  CHECK(rescale_identity_check({1.0, 1.0, 3}, 1.0 - 1e-12, *grid) <= 1e-12);
  CHECK(rescale_identity_check({3.0, 2.0, 5}, 1.9, *make_grid(15.0, 64, 1.0, 5)) <= 1e-12);
}

TEST_CASE("laplacian_weight_identity closed form") {
  CHECK(laplacian_weight_identity(0.0, 1.0, 5) ==
        doctest::Approx(-5.0 * std::sqrt(6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(laplacian_weight_identity(1.0, 1.0, 4), GridError);
  CHECK_THROWS_AS(laplacian_weight_identity(1.0, 1.0, 3), GridError);

  std::mt19937 rng(42);
  std::uniform_real_distribution<double> rdist(0.0, 50.0), kdist(0.2, 4.0);
  for (int n : {5, 7, 9}) {
    for (int trial = 0; trial < 30; ++trial) {
      const double v = laplacian_weight_identity(rdist(rng), kdist(rng), n);
      CHECK(v < 0.0);
    }
  }

  // r -> infinity: -(N-4) * 2/r^2 * B~^alpha asymptotically, from above.
  const double r = 4000.0;
  const double asym = -(5 - 4) * 2.0 / (r * r) * weight_value(r, 0.5, 1.0, 5);
  CHECK(laplacian_weight_identity(r, 1.0, 5) == doctest::Approx(asym).epsilon(1e-2));
  CHECK(std::abs(laplacian_weight_identity(r, 1.0, 5)) < 1e-6);
}

TEST_CASE("drift_diffusion_bound closed form and two-sided assembly") {
  CHECK(drift_diffusion_bound(0.0, 1.0, 5) ==
        doctest::Approx(-5.0 / 6.0 * std::sqrt(6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(drift_diffusion_bound(1.0, 1.0, 4), GridError);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> rdist(0.0, 30.0), kdist(0.3, 3.0);
  for (int n : {5, 7, 9}) {
    for (int trial = 0; trial < 40; ++trial) {
      const double r = rdist(rng), k2 = kdist(rng);
      const double direct = drift_diffusion_bound(r, k2, n);
      CHECK(direct < 0.0);
      // Assemble the left-hand side from the Laplacian identity and the
      // closed-form gradient term.
      const double assembled =
          (k2 + r * r) / (2.0 * (n - 2)) * laplacian_weight_identity(r, k2, n) -
          radial_gradient_weight(r, k2, n) / (n - 2);
      CHECK(assembled == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("residual_rescaled_pde vanishes on B~_k at the scheme order") {
  auto sup_residual = [](double k, int n, int m) {
    auto g = make_grid(10.0, m, 1.0, n);
    RadialProfile f = sample_rescaled_barenblatt(g, k);
    RadialProfile res = residual_rescaled_pde(f);
    double sup = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) sup = std::max(sup, std::abs(res.value(i)));
    return sup;
  };
  for (double k : {0.5, 1.0, 3.0}) {
    const double e1 = sup_residual(k, 3, 200);
    const double e2 = sup_residual(k, 3, 400);
    CHECK(e2 < e1 / 3.0);  // halving h quarters the sup up to low-order noise
  }
  const double e5 = sup_residual(1.0, 5, 200);
  CHECK(sup_residual(1.0, 5, 400) < e5 / 3.0);
}

TEST_CASE("residual_rescaled_pde flags a wrong amplitude") {
  // f = 2 B~_1 has continuum residual (1/(N-2)) div(x B~_1) with value
  // 2N/k at the origin; it must not vanish under refinement.
  for (int m : {200, 400, 800}) {
    auto g = make_grid(10.0, m, 1.0, 3);
    RadialProfile f = profile_from_function(
        g, [](double r) { return 2.0 * rescaled_barenblatt_value(r, 1.0, 3); });
    RadialProfile res = residual_rescaled_pde(f);
    double sup = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) sup = std::max(sup, std::abs(res.value(i)));
    CHECK(sup > 5.0);  // continuum value at r = 0 is 2N/k = 6
  }

  auto g = make_grid(10.0, 64, 1.0, 3);
  std::vector<double> vals(g->node_count(), 1.0);
  vals[3] = 0.0;
  CHECK_THROWS_AS(residual_rescaled_pde(RadialProfile(g, vals)), PositivityError);
}
