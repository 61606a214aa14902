#pragma once

#include <array>
#include <cstdint>

#include "smd/theory.hpp"

namespace smd {

// Squared weight norm ||w_t||_2^2 evolved by the scalar SGD map.
struct SgdNormState {
  double x;
};

// 3-state SGDM norm dynamics: (||w_t||^2, <w_t, w_{t-1}>, ||w_{t-1}||^2).
struct SgdmNormState {
  double x;
  double ip;
  double x_prev;
};

// x_{t+1} = (1 - 2*lambda*eta) x_t + L_t*eta^2 / x_t. The O((lambda*eta)^2)
// term is dropped, matching the derivation; pass exact_decay = true to use
// the full (1 - lambda*eta)^2 factor instead for sensitivity checks.
SgdNormState sgd_norm_step(SgdNormState state, double L_t,
                           const HyperParams& hp, bool exact_decay = false);

// Transition matrix of the 3-state SGDM map with its exact eigenvalues
// (descending) and the first-order approximations of the extremes.
struct SgdmMatrix {
  std::array<std::array<double, 3>, 3> a;
  std::array<double, 3> eigenvalues;  // lambda1 > lambda2 = alpha > lambda3
  double lambda1_approx;              // 1 - 2*lambda*eta/(1-alpha)
  double lambda3_approx;              // alpha^2 * (1 + 2*lambda*eta/(1-alpha))
};

// Throws std::domain_error("complex-eigenvalues...") when
// lambda*eta >= (1 - sqrt(alpha))^2.
SgdmMatrix build_sgdm_matrix(const HyperParams& hp);

// X_{t+1} = A X_t + (h_tilde*eta^2 / x_t) e, with e = (1,0,0)^T.
SgdmNormState sgdm_norm_step(const SgdmNormState& state, double h_tilde,
                             const HyperParams& hp);

// Fixed point of the 3-state map under constant forcing L, obtained by
// solving (I - A) X = (L*eta^2/x*) e with x* from the closed form.
// Returns (x*, ip*, x_prev*); the components sum structure satisfies
// e^T X* = x*.
SgdmNormState sgdm_fixed_point(double L, const HyperParams& hp);

// x_t >= sqrt(L/(1-a)) - a^(t-1) |sqrt(L/(1-a)) - x1| for any sequence with
// x_{t+1} >= a x_t + L/x_t. Used as a trajectory oracle.
double lemma2_lower_bound(double x1, double L, double a, std::int64_t t);

enum class ProcessKind { constant, noisy, sinusoidal, noisy_sinusoidal };

// Generator of the unit-gradient-norm-square sequence L_t. Immutable after
// construction; draws are keyed by (seed, t) so the sequence is
// random-access reproducible.
class GradNormProcess {
 public:
  static GradNormProcess constant(double base);
  static GradNormProcess noisy(double base, double noise_half_width,
                               std::uint64_t seed);
  static GradNormProcess sinusoidal(double base, double period_scale);
  static GradNormProcess noisy_sinusoidal(double base, double noise_half_width,
                                          double period_scale,
                                          std::uint64_t seed);

  double value(std::int64_t t) const;

  // Same process, different noise stream. Used to derive per-trial streams.
  GradNormProcess with_seed(std::uint64_t seed) const;

  ProcessKind kind() const { return kind_; }
  double base() const { return base_; }
  double noise_half_width() const { return noise_half_width_; }
  double period_scale() const { return period_scale_; }
  std::uint64_t seed() const { return seed_; }

 private:
  GradNormProcess(ProcessKind kind, double base, double noise_half_width,
                  double period_scale, std::uint64_t seed);

  ProcessKind kind_;
  double base_;
  double noise_half_width_;
  double period_scale_;
  std::uint64_t seed_;
};

}  // namespace smd
