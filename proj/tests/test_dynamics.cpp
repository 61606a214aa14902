#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "smd/dynamics.hpp"
#include "smd/theory.hpp"

using namespace smd;

TEST_CASE("scalar sgd map") {
  HyperParams hp{0.1, 0.001, 0.0};
  CHECK(sgd_norm_step({10.0}, 10.0, hp).x ==
        doctest::Approx(10.008).epsilon(1e-12));
  // no decay: pure noise-driven growth
  CHECK(sgd_norm_step({10.0}, 10.0, HyperParams{0.1, 0.0, 0.0}).x ==
        doctest::Approx(10.01).epsilon(1e-12));
  // exact decay differs from the first-order map by (lambda*eta)^2 * x
  double approx = sgd_norm_step({10.0}, 10.0, hp).x;
  double exact = sgd_norm_step({10.0}, 10.0, hp, true).x;
  CHECK(exact - approx == doctest::Approx(1e-8 * 10.0).epsilon(1e-6));

  CHECK_THROWS_AS(sgd_norm_step({0.0}, 10.0, hp), std::domain_error);
  CHECK_THROWS_AS(sgd_norm_step({-1.0}, 10.0, hp), std::domain_error);
  CHECK_THROWS_AS(sgd_norm_step({10.0}, 0.0, hp), std::invalid_argument);
}

TEST_CASE("sgd map fixed point and local rate") {
  HyperParams hp{0.1, 0.001, 0.0};
  const double L = 10.0;
  const Equilibrium eq = equilibrium_sgd(L, hp);

  // x* is an exact fixed point of the first-order map
  CHECK(sgd_norm_step({eq.x_star}, L, hp).x ==
        doctest::Approx(eq.x_star).epsilon(1e-12));

  // slope at the fixed point is the squared-gap contraction sqrt: 1-4*le
  const double h = 1e-4 * eq.x_star;
  double slope = (sgd_norm_step({eq.x_star + h}, L, hp).x -
                  sgd_norm_step({eq.x_star - h}, L, hp).x) /
                 (2.0 * h);
  CHECK(slope == doctest::Approx(1.0 - 4.0 * hp.lambda * hp.eta).epsilon(1e-6));

  // iterated map converges to x* from both sides
  SgdNormState lo{1.0}, hi{1000.0};
  for (int t = 0; t < 60000; ++t) {
    lo = sgd_norm_step(lo, L, hp);
    hi = sgd_norm_step(hi, L, hp);
  }
  CHECK(lo.x == doctest::Approx(eq.x_star).epsilon(1e-6));
  CHECK(hi.x == doctest::Approx(eq.x_star).epsilon(1e-6));
}

TEST_CASE("sgdm matrix eigenstructure") {
  HyperParams hp{0.1, 0.001, 0.9};
  SgdmMatrix m = build_sgdm_matrix(hp);
  CHECK(m.eigenvalues[0] == doctest::Approx(0.997984).epsilon(1e-5));
  CHECK(m.eigenvalues[1] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(m.eigenvalues[2] == doctest::Approx(0.81163734).epsilon(1e-7));
  CHECK(m.lambda1_approx == doctest::Approx(0.998).epsilon(1e-12));
  CHECK(m.lambda3_approx == doctest::Approx(0.81 * 1.002).epsilon(1e-12));

  // zero coupling: eigenvalues are exactly (1, alpha, alpha^2)
  SgdmMatrix m0 = build_sgdm_matrix(HyperParams{0.1, 0.0, 0.9});
  CHECK(m0.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m0.eigenvalues[1] == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(m0.eigenvalues[2] == doctest::Approx(0.81).epsilon(1e-14));

  // characteristic polynomial of the stated matrix vanishes at each
  // eigenvalue: det(A - mu I) via direct 3x3 expansion
  for (double mu : m.eigenvalues) {
    const auto& a = m.a;
    double det =
        (a[0][0] - mu) * ((a[1][1] - mu) * (a[2][2] - mu) - a[1][2] * a[2][1]) -
        a[0][1] * (a[1][0] * (a[2][2] - mu) - a[1][2] * a[2][0]) +
        a[0][2] * (a[1][0] * a[2][1] - (a[1][1] - mu) * a[2][0]);
    CHECK(std::abs(det) < 1e-10);
  }

  CHECK_THROWS_AS(build_sgdm_matrix(HyperParams{0.1, 0.03, 0.9}),
                  std::domain_error);
  CHECK_THROWS_AS(build_sgdm_matrix(HyperParams{0.0, 0.001, 0.9}),
                  std::invalid_argument);
}

TEST_CASE("eigenvalue ordering across a hyperparameter grid") {
  for (double eta : {0.02, 0.1, 0.4}) {
    for (double lambda : {1e-4, 1e-3}) {
      for (double alpha : {0.5, 0.9, 0.99}) {
        HyperParams hp{eta, lambda, alpha};
        if (lambda * eta >= (1.0 - std::sqrt(alpha)) * (1.0 - std::sqrt(alpha)))
          continue;
        SgdmMatrix m = build_sgdm_matrix(hp);
        CHECK(m.eigenvalues[0] < 1.0);
        CHECK(m.eigenvalues[0] > m.eigenvalues[1]);
        CHECK(m.eigenvalues[1] == doctest::Approx(alpha).epsilon(1e-14));
        CHECK(m.eigenvalues[1] > m.eigenvalues[2]);
        CHECK(m.eigenvalues[2] > 0.0);
        // first-order approximation error is O(le^2/(1-a)^3)
        double le = lambda * eta;
        CHECK(std::abs(m.eigenvalues[0] - m.lambda1_approx) <
              20.0 * le * le / std::pow(1.0 - alpha, 3));
      }
    }
  }
}

TEST_CASE("sgdm map step and fixed point") {
  HyperParams hp{0.1, 0.001, 0.9};
  SgdmNormState s = sgdm_norm_step({10.0, 10.0, 10.0}, 10.0, hp);
  CHECK(s.x == doctest::Approx(10.0080001).epsilon(1e-10));
  CHECK(s.ip == doctest::Approx(1.8999 * 10.0 - 9.0).epsilon(1e-12));
  CHECK(s.x_prev == doctest::Approx(10.0).epsilon(1e-14));

  SgdmNormState fp = sgdm_fixed_point(10.0, hp);
  Equilibrium eq = equilibrium_sgdm(10.0, hp);
  CHECK(fp.x == doctest::Approx(eq.x_star).epsilon(1e-9));
  SgdmNormState fp2 = sgdm_norm_step(fp, 10.0, hp);
  CHECK(fp2.x == doctest::Approx(fp.x).epsilon(1e-11));
  CHECK(fp2.ip == doctest::Approx(fp.ip).epsilon(1e-11));
  CHECK(fp2.x_prev == doctest::Approx(fp.x_prev).epsilon(1e-11));
}

TEST_CASE("sgdm trajectory properties") {
  HyperParams hp{0.1, 0.001, 0.9};
  const double L = 10.0;
  SgdmNormState s{10.0, 10.0, 10.0};
  const SgdmMatrix m = build_sgdm_matrix(hp);
  const double x_star = equilibrium_sgdm(L, hp).x_star;

  std::vector<double> gaps;
  for (int t = 0; t < 4000; ++t) {
    s = sgdm_norm_step(s, L, hp);
    // Cauchy-Schwarz on (x, ip, x_prev) as (<w,w>, <w,w_prev>, <w_prev,w_prev>)
    CHECK(s.ip * s.ip <= s.x * s.x_prev * (1.0 + 1e-12));
    if (t >= 1000) gaps.push_back(std::abs(s.x - x_star));
  }
  // asymptotic decay rate of the gap matches the dominant eigenvalue of the
  // Jacobian at the fixed point: the linear part A corrected by the
  // derivative of the forcing term -L*eta^2/x^2 in the first entry
  auto j = m.a;
  j[0][0] -= L * hp.eta * hp.eta / (x_star * x_star);
  std::array<double, 3> v{1.0, 1.0, 1.0};
  double mu = 0.0;
  for (int it = 0; it < 20000; ++it) {
    std::array<double, 3> nv{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) nv[r] += j[r][c] * v[c];
    mu = nv[0] / v[0];
    const double scale = std::abs(nv[0]);
    for (int r = 0; r < 3; ++r) v[r] = nv[r] / scale;
  }
  double slope =
      std::log(gaps.back() / gaps.front()) / static_cast<double>(gaps.size() - 1);
  CHECK(slope == doctest::Approx(std::log(mu)).epsilon(1e-3));
  // ... and agrees with the first-order rate 1 - 4*le/(1-a) to a few percent
  const double rate = 1.0 - 4.0 * hp.lambda * hp.eta / (1.0 - hp.alpha);
  CHECK(slope == doctest::Approx(std::log(rate)).epsilon(0.05));
}

TEST_CASE("lemma-style lower bound holds along trajectories") {
  // x_{t+1} = a x_t + c / x_t with x in norm (not squared-norm) units
  const double a = 0.9995, c = 0.05;
  double x = 0.3;
  for (std::int64_t t = 1; t <= 5000; ++t) {
    CHECK(x >= lemma2_lower_bound(0.3, c, a, t) - 1e-12);
    x = a * x + c / x;
  }
  CHECK(lemma2_lower_bound(0.3, c, a, 1) ==
        doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(lemma2_lower_bound(-1.0, c, a, 1), std::invalid_argument);
  CHECK_THROWS_AS(lemma2_lower_bound(0.3, c, 1.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(lemma2_lower_bound(0.3, c, a, 0), std::invalid_argument);
}

TEST_CASE("grad norm processes") {
  GradNormProcess c = GradNormProcess::constant(10.0);
  CHECK(c.value(0) == 10.0);
  CHECK(c.value(123456) == 10.0);

  GradNormProcess s = GradNormProcess::sinusoidal(10.0, 1e5);
  CHECK(s.value(0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(s.value(157080) == doctest::Approx(11.0).epsilon(1e-6));

  GradNormProcess n = GradNormProcess::noisy(10.0, 3.0, 42);
  double sum = 0.0;
  for (std::int64_t t = 0; t < 20000; ++t) {
    double v = n.value(t);
    CHECK(v >= 7.0);
    CHECK(v <= 13.0);
    sum += v;
  }
  CHECK(sum / 20000.0 == doctest::Approx(10.0).epsilon(5e-3));
  // random access is reproducible and order independent
  CHECK(n.value(777) == n.value(777));
  GradNormProcess n2 = n.with_seed(43);
  CHECK(n2.value(777) != n.value(777));

  GradNormProcess ns = GradNormProcess::noisy_sinusoidal(10.0, 3.0, 1e4, 7);
  for (std::int64_t t = 0; t < 1000; ++t) {
    CHECK(ns.value(t) >= 6.0);
    CHECK(ns.value(t) <= 14.0);
  }

  // base must dominate noise width plus sine amplitude
  CHECK_THROWS_AS(GradNormProcess::noisy(3.0, 3.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(GradNormProcess::noisy_sinusoidal(3.5, 3.0, 1e4, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(GradNormProcess::sinusoidal(10.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(GradNormProcess::constant(-1.0), std::invalid_argument);
}
