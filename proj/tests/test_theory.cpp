#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "smd/theory.hpp"

using namespace smd;

TEST_CASE("hyperparam validation") {
  HyperParams hp{0.1, 0.001, 0.0};
  CHECK_NOTHROW(hp.validate());

  CHECK_THROWS_AS((HyperParams{0.0, 0.001, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{1.0, 0.001, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{0.1, 0.0, 0.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{0.1, 0.001, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((HyperParams{0.1, 0.001, -0.1}.validate()), std::invalid_argument);
  // coupling too strong
  CHECK_THROWS_AS((HyperParams{0.9, 0.5, 0.0}.validate()), std::invalid_argument);
  // real-eigenvalue condition: lambda*eta must stay below (1-sqrt(alpha))^2
  CHECK_THROWS_AS((HyperParams{0.1, 0.03, 0.9}.validate()), std::invalid_argument);
  CHECK_NOTHROW(HyperParams{0.1, 0.001, 0.9}.validate());

  // step variant admits lambda == 0, nothing else changes
  CHECK_NOTHROW(validate_for_step(HyperParams{0.1, 0.0, 0.0}));
  CHECK_NOTHROW(validate_for_step(HyperParams{0.1, 0.0, 0.9}));
  CHECK_THROWS_AS(validate_for_step(HyperParams{0.0, 0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_for_step(HyperParams{0.1, 0.03, 0.9}),
                  std::invalid_argument);

  CHECK_FALSE((HyperParams{0.1, 0.001, 0.0}.marginal_coupling()));
  CHECK((HyperParams{0.9, 0.02, 0.0}.marginal_coupling()));
}

TEST_CASE("sgd equilibrium closed form") {
  HyperParams hp{0.1, 0.001, 0.0};
  Equilibrium eq = equilibrium_sgd(10.0, hp);
  CHECK(eq.w_star == doctest::Approx(4.72871).epsilon(1e-5));
  CHECK(eq.x_star == doctest::Approx(22.3607).epsilon(1e-5));
  CHECK(eq.delta_star == doctest::Approx(0.0141421).epsilon(1e-5));
  CHECK(eq.rate == doctest::Approx(0.9996).epsilon(1e-12));
  CHECK(eq.x_star == doctest::Approx(eq.w_star * eq.w_star).epsilon(1e-12));

  Equilibrium eq2 = equilibrium_sgd(10.0, HyperParams{0.2, 1e-4, 0.0});
  CHECK(eq2.delta_star == doctest::Approx(6.3246e-3).epsilon(1e-4));

  // scaling law: w* ~ L^(1/4)
  Equilibrium eq16 = equilibrium_sgd(160.0, hp);
  CHECK(eq16.w_star == doctest::Approx(2.0 * eq.w_star).epsilon(1e-12));

  CHECK_THROWS_AS(equilibrium_sgd(10.0, HyperParams{0.1, 0.001, 0.9}),
                  std::invalid_argument);
  CHECK_THROWS_AS(equilibrium_sgd(-1.0, hp), std::invalid_argument);
}

TEST_CASE("sgdm equilibrium closed form") {
  HyperParams hp{0.1, 0.001, 0.9};
  Equilibrium eq = equilibrium_sgdm(10.0, hp);
  CHECK(eq.w_star == doctest::Approx(8.4091).epsilon(1e-4));
  CHECK(eq.x_star == doctest::Approx(70.712).epsilon(1e-4));
  CHECK(eq.x_star * eq.x_star == doctest::Approx(5000.13).epsilon(1e-5));
  CHECK(eq.delta_star == doctest::Approx(0.0102598).epsilon(1e-4));
  CHECK(eq.rate == doctest::Approx(0.996).epsilon(1e-12));

  Equilibrium eqd = equilibrium_sgdm(10.0, HyperParams{0.2, 1e-4, 0.9});
  CHECK(eqd.delta_star == doctest::Approx(4.5883e-3).epsilon(1e-4));

  // momentum shrinks the angular update by sqrt(1+alpha) and contracts
  // faster by 1/(1-alpha)
  Equilibrium sgd = equilibrium_sgd(10.0, HyperParams{0.1, 0.001, 0.0});
  CHECK(eq.delta_star ==
        doctest::Approx(sgd.delta_star / std::sqrt(1.9)).epsilon(1e-12));
  CHECK(1.0 - eq.rate ==
        doctest::Approx((1.0 - sgd.rate) / 0.1).epsilon(1e-12));
}

TEST_CASE("transition iterations") {
  // post-drop learning rate: eta0=0.5 divided by 10
  HyperParams post{0.05, 0.002, 0.0};
  CHECK(transition_iterations(10.0, post) == 5757);
  // momentum scales the bound by (1-alpha)
  HyperParams postm{0.05, 0.002, 0.9};
  CHECK(transition_iterations(10.0, postm) == 576);

  HyperParams hp{0.1, 0.001, 0.0};
  CHECK(transition_iterations(2.0, hp) ==
        static_cast<std::int64_t>(std::ceil(std::log(2.0) / 4e-4)));
  CHECK(transition_iterations(5.0, hp) < transition_iterations(10.0, hp));
  CHECK_THROWS_AS(transition_iterations(1.0, hp), std::invalid_argument);
  CHECK_THROWS_AS(transition_iterations(0.5, hp), std::invalid_argument);
}

TEST_CASE("variance bounds") {
  HyperParams hp{0.1, 0.001, 0.0};
  CHECK(variance_bound_sgd(3.0, 7.0, 1.0, 10000, hp) ==
        doctest::Approx(0.0226).epsilon(2e-3));
  // closed form check
  double expect = std::pow(0.9996, 10000) + 3.0 * 0.01 / 7.0;
  CHECK(variance_bound_sgd(3.0, 7.0, 1.0, 10000, hp) ==
        doctest::Approx(expect).epsilon(1e-12));
  // bound decreases in T and in l
  CHECK(variance_bound_sgd(3.0, 7.0, 1.0, 20000, hp) <
        variance_bound_sgd(3.0, 7.0, 1.0, 10000, hp));
  CHECK(variance_bound_sgd(3.0, 14.0, 1.0, 10000, hp) <
        variance_bound_sgd(3.0, 7.0, 1.0, 10000, hp));

  HyperParams hpm{0.1, 0.001, 0.9};
  // alpha=0.9 noise coefficient: 3*(1+4a^2+a^4)/(1-a)^4 = 3*4.8961e4
  double floor = variance_bound_sgdm(1.0, 1.0, 0.0, 1, hpm);
  CHECK(floor == doctest::Approx(146883.0 * 0.01).epsilon(1e-6));
  // transient term: 3B at T=0
  CHECK(variance_bound_sgdm(0.0, 1.0, 2.0, 0, hpm) ==
        doctest::Approx(6.0).epsilon(1e-12));
  // tightened floor is smaller than the generic one when L == l
  CHECK(variance_bound_sgdm_tightened(1.0, 1.0, 0.0, 1, hpm) <
        variance_bound_sgdm(1.0, 1.0, 0.0, 1, hpm));
}

TEST_CASE("noise floor predicates") {
  HyperParams hp{0.1, 0.001, 0.0};
  CHECK(noise_floor_ok_sgd(7.0, 10.0, hp));
  // 2*(2*le/(1-2*le))^2*L with le=1e-4 is ~ 8e-8*L: only absurdly small l fails
  CHECK_FALSE(noise_floor_ok_sgd(1e-9, 10.0, hp));

  HyperParams hpm{0.1, 0.001, 0.9};
  CHECK(noise_floor_ok_sgdm(7.0, 10.0, hpm));
  CHECK_FALSE(noise_floor_ok_sgdm(1e-9, 10.0, hpm));
}
