#include "smd/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "smd/rng.hpp"

namespace smd {

namespace {

constexpr double kDegenerateX = 1e-300;

void check_state_positive(double x) {
  if (!(x > 0.0))
    throw std::domain_error("non-positive-state: squared norm must be > 0");
  if (x < kDegenerateX)
    throw std::domain_error("degenerate-state: squared norm underflowed");
}

}  // namespace

SgdNormState sgd_norm_step(SgdNormState state, double L_t,
                           const HyperParams& hp, bool exact_decay) {
  validate_for_step(hp);
  check_state_positive(state.x);
  if (!(L_t > 0.0))
    throw std::invalid_argument("non-positive-L: forcing must be > 0");
  const double le = hp.lambda * hp.eta;
  const double decay = exact_decay ? (1.0 - le) * (1.0 - le) : 1.0 - 2.0 * le;
  return {decay * state.x + L_t * hp.eta * hp.eta / state.x};
}

SgdmMatrix build_sgdm_matrix(const HyperParams& hp) {
  if (!(hp.eta > 0.0 && hp.eta < 1.0) ||
      !(hp.lambda >= 0.0 && hp.lambda < 1.0) ||
      !(hp.alpha >= 0.0 && hp.alpha < 1.0))
    throw std::invalid_argument("invalid-hyperparams");
  const double a = hp.alpha;
  const double le = hp.lambda * hp.eta;
  const double b = 1.0 + a - le;
  const double disc = b * b - 4.0 * a;
  if (!(disc > 0.0))
    throw std::domain_error(
        "complex-eigenvalues: requires lambda*eta < (1-sqrt(alpha))^2");

  SgdmMatrix m;
  m.a = {{{b * b, -2.0 * a * b, a * a}, {b, -a, 0.0}, {1.0, 0.0, 0.0}}};
  const double root = std::sqrt(disc);
  const double l1 = (b * b + b * root) / 2.0 - a;
  const double l3 = (b * b - b * root) / 2.0 - a;
  m.eigenvalues = {l1, a, l3};
  m.lambda1_approx = 1.0 - 2.0 * le / (1.0 - a);
  m.lambda3_approx = a * a * (1.0 + 2.0 * le / (1.0 - a));
  return m;
}

SgdmNormState sgdm_norm_step(const SgdmNormState& state, double h_tilde,
                             const HyperParams& hp) {
  validate_for_step(hp);
  check_state_positive(state.x);
  const double a = hp.alpha;
  const double b = 1.0 + a - hp.lambda * hp.eta;
  SgdmNormState next;
  next.x = b * b * state.x - 2.0 * a * b * state.ip + a * a * state.x_prev +
           h_tilde * hp.eta * hp.eta / state.x;
  next.ip = b * state.x - a * state.ip;
  next.x_prev = state.x;
  return next;
}

SgdmNormState sgdm_fixed_point(double L, const HyperParams& hp) {
  if (!(L > 0.0)) throw std::invalid_argument("non-positive-L");
  const SgdmMatrix m = build_sgdm_matrix(hp);
  const double x_star = equilibrium_sgdm(L, hp).x_star;
  const double force = L * hp.eta * hp.eta / x_star;

  // Solve (I - A) X = force * e by Gaussian elimination with partial
  // pivoting; the system is 3x3 and well conditioned for valid hp.
  double mat[3][4] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j)
      mat[i][j] = (i == j ? 1.0 : 0.0) - m.a[i][j];
    mat[i][3] = i == 0 ? force : 0.0;
  }
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(mat[r][col]) > std::abs(mat[pivot][col])) pivot = r;
    for (int j = 0; j < 4; ++j) std::swap(mat[col][j], mat[pivot][j]);
    if (mat[col][col] == 0.0)
      throw std::domain_error("singular fixed-point system");
    for (int r = col + 1; r < 3; ++r) {
      const double f = mat[r][col] / mat[col][col];
      for (int j = col; j < 4; ++j) mat[r][j] -= f * mat[col][j];
    }
  }
  double sol[3];
  for (int i = 2; i >= 0; --i) {
    double s = mat[i][3];
    for (int j = i + 1; j < 3; ++j) s -= mat[i][j] * sol[j];
    sol[i] = s / mat[i][i];
  }
  return {sol[0], sol[1], sol[2]};
}

double lemma2_lower_bound(double x1, double L, double a, std::int64_t t) {
  if (!(x1 > 0.0)) throw std::invalid_argument("invalid-argument: x1 must be > 0");
  if (!(L > 0.0)) throw std::invalid_argument("non-positive-L");
  if (!(a > 0.0 && a < 1.0))
    throw std::invalid_argument("invalid-argument: contraction must be in (0,1)");
  if (t < 1) throw std::invalid_argument("invalid-argument: t must be >= 1");
  const double limit = std::sqrt(L / (1.0 - a));
  return limit - std::pow(a, static_cast<double>(t - 1)) * std::abs(limit - x1);
}

GradNormProcess::GradNormProcess(ProcessKind kind, double base,
                                 double noise_half_width, double period_scale,
                                 std::uint64_t seed)
    : kind_(kind),
      base_(base),
      noise_half_width_(noise_half_width),
      period_scale_(period_scale),
      seed_(seed) {
  const bool has_sine =
      kind == ProcessKind::sinusoidal || kind == ProcessKind::noisy_sinusoidal;
  const double amplitude = has_sine ? 1.0 : 0.0;
  if (!(base > 0.0) || !(base - noise_half_width - amplitude > 0.0))
    throw std::invalid_argument(
        "invalid-process: base - noise_half_width - amplitude must be > 0");
  if (noise_half_width < 0.0)
    throw std::invalid_argument("invalid-process: noise_half_width must be >= 0");
  if (has_sine && !(period_scale > 0.0))
    throw std::invalid_argument("invalid-process: period_scale must be > 0");
}

GradNormProcess GradNormProcess::constant(double base) {
  return {ProcessKind::constant, base, 0.0, 0.0, 0};
}

GradNormProcess GradNormProcess::noisy(double base, double noise_half_width,
                                       std::uint64_t seed) {
  return {ProcessKind::noisy, base, noise_half_width, 0.0, seed};
}

GradNormProcess GradNormProcess::sinusoidal(double base, double period_scale) {
  return {ProcessKind::sinusoidal, base, 0.0, period_scale, 0};
}

GradNormProcess GradNormProcess::noisy_sinusoidal(double base,
                                                  double noise_half_width,
                                                  double period_scale,
                                                  std::uint64_t seed) {
  return {ProcessKind::noisy_sinusoidal, base, noise_half_width, period_scale,
          seed};
}

GradNormProcess GradNormProcess::with_seed(std::uint64_t seed) const {
  GradNormProcess copy = *this;
  copy.seed_ = seed;
  return copy;
}

double GradNormProcess::value(std::int64_t t) const {
  if (t < 0) throw std::invalid_argument("invalid-argument: t must be >= 0");
  double v = base_;
  if (kind_ == ProcessKind::sinusoidal || kind_ == ProcessKind::noisy_sinusoidal)
    v += std::sin(static_cast<double>(t) / period_scale_);
  if (kind_ == ProcessKind::noisy || kind_ == ProcessKind::noisy_sinusoidal) {
    const double u = keyed_uniform(seed_, static_cast<std::uint64_t>(t));
    v += noise_half_width_ * (2.0 * u - 1.0);
  }
  return v;
}

}  // namespace smd
