#pragma once

#include <cstdint>

namespace smd {

// Hyperparameters of SGD/SGDM with weight decay. alpha == 0 means plain SGD.
struct HyperParams {
  double eta = 0.1;     // learning rate
  double lambda = 1e-4; // weight decay coefficient
  double alpha = 0.0;   // momentum coefficient

  // Throws std::invalid_argument naming the violated assumption.
  // Checks eta, lambda in (0,1), alpha in [0,1), lambda*eta < 0.1, and for
  // alpha > 0 the real-eigenvalue condition lambda*eta < (1-sqrt(alpha))^2.
  void validate() const;

  // True when lambda*eta > 0.01: still accepted, but the first-order
  // approximations behind the closed forms start to degrade.
  bool marginal_coupling() const { return lambda * eta > 0.01; }
};

// Validation for step functions: identical to HyperParams::validate()
// except that lambda == 0 (no weight decay) is permitted. The closed-form
// equilibria divide by lambda and keep the strict invariant.
void validate_for_step(const HyperParams& hp);

// Closed-form equilibrium quantities for a given hyperparameter set.
struct Equilibrium {
  double w_star;     // theoretical weight norm
  double x_star;     // theoretical squared norm, w_star^2
  double delta_star; // theoretical angular update (radians)
  double rate;       // per-iteration contraction factor of E[(x_t - x*)^2]
};

// w* = (L*eta/(2*lambda))^(1/4), delta* = sqrt(2*lambda*eta),
// rate = 1 - 4*lambda*eta. Requires alpha == 0.
Equilibrium equilibrium_sgd(double L, const HyperParams& hp);

// w* = (L*eta/(lambda*(1-alpha)*(2 - lambda*eta/(1+alpha))))^(1/4),
// delta* = sqrt(2*lambda*eta/(1+alpha)), rate = 1 - 4*lambda*eta/(1-alpha).
Equilibrium equilibrium_sgdm(double L, const HyperParams& hp);

// Lower bound on iterations needed to reach the new equilibrium after the
// learning rate is divided by k. Natural logarithm; hp carries the
// learning rate in effect after the drop.
std::int64_t transition_iterations(double k, const HyperParams& hp);

// (1-4*lambda*eta)^T * B + V*eta^2/l.
double variance_bound_sgd(double V, double l, double B, std::int64_t T,
                          const HyperParams& hp);

// 3B*(1-4*lambda*eta/(1-alpha))^T + 3V*eta^2*(1+4a^2+a^4)/(l*(1-a)^4).
double variance_bound_sgdm(double V, double l, double B, std::int64_t T,
                           const HyperParams& hp);

// Tightened SGDM variant: the variance floor is evaluated against 2L(1-a)^2
// instead of l(1-a)^4, valid once x_t is close to its theoretical value.
double variance_bound_sgdm_tightened(double V, double L, double B,
                                     std::int64_t T, const HyperParams& hp);

// Noise-floor predicates: the lower bound l of the forcing statistic must
// not be too far below its expectation L for the contraction argument to go
// through.
bool noise_floor_ok_sgd(double l, double L, const HyperParams& hp);
bool noise_floor_ok_sgdm(double l, double L, const HyperParams& hp);

}  // namespace smd
