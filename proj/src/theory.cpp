#include "smd/theory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smd {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void require_positive_L(double L) {
  if (!(L > 0.0)) throw std::invalid_argument("non-positive-L: forcing expectation must be > 0");
}

}  // namespace

void HyperParams::validate() const {
  require(eta > 0.0 && eta < 1.0, "invalid-hyperparams: eta must be in (0,1)");
  require(lambda > 0.0 && lambda < 1.0,
          "invalid-hyperparams: lambda must be in (0,1)");
  require(alpha >= 0.0 && alpha < 1.0,
          "invalid-hyperparams: alpha must be in [0,1)");
  require(lambda * eta < 0.1,
          "invalid-hyperparams: lambda*eta must be << 1 (hard limit 0.1)");
  if (alpha > 0.0) {
    const double limit = (1.0 - std::sqrt(alpha)) * (1.0 - std::sqrt(alpha));
    require(lambda * eta < limit,
            "invalid-hyperparams: lambda*eta must be < (1-sqrt(alpha))^2 "
            "for real eigenvalues");
  }
}

void validate_for_step(const HyperParams& hp) {
  require(hp.eta > 0.0 && hp.eta < 1.0,
          "invalid-hyperparams: eta must be in (0,1)");
  require(hp.lambda >= 0.0 && hp.lambda < 1.0,
          "invalid-hyperparams: lambda must be in [0,1)");
  require(hp.alpha >= 0.0 && hp.alpha < 1.0,
          "invalid-hyperparams: alpha must be in [0,1)");
  require(hp.lambda * hp.eta < 0.1,
          "invalid-hyperparams: lambda*eta must be << 1 (hard limit 0.1)");
  if (hp.alpha > 0.0) {
    const double limit =
        (1.0 - std::sqrt(hp.alpha)) * (1.0 - std::sqrt(hp.alpha));
    require(hp.lambda * hp.eta < limit,
            "invalid-hyperparams: lambda*eta must be < (1-sqrt(alpha))^2");
  }
}

Equilibrium equilibrium_sgd(double L, const HyperParams& hp) {
  hp.validate();
  require(hp.alpha == 0.0, "invalid-hyperparams: equilibrium_sgd requires alpha == 0");
  require_positive_L(L);
  Equilibrium eq;
  eq.w_star = std::pow(L * hp.eta / (2.0 * hp.lambda), 0.25);
  eq.x_star = eq.w_star * eq.w_star;
  eq.delta_star = std::sqrt(2.0 * hp.lambda * hp.eta);
  eq.rate = 1.0 - 4.0 * hp.lambda * hp.eta;
  return eq;
}

Equilibrium equilibrium_sgdm(double L, const HyperParams& hp) {
  hp.validate();
  require_positive_L(L);
  const double le = hp.lambda * hp.eta;
  Equilibrium eq;
  eq.x_star = std::sqrt(
      L * hp.eta / (hp.lambda * (1.0 - hp.alpha) * (2.0 - le / (1.0 + hp.alpha))));
  eq.w_star = std::sqrt(eq.x_star);
  eq.delta_star = std::sqrt(2.0 * le / (1.0 + hp.alpha));
  eq.rate = 1.0 - 4.0 * le / (1.0 - hp.alpha);
  return eq;
}

std::int64_t transition_iterations(double k, const HyperParams& hp) {
  hp.validate();
  require(k > 1.0, "invalid-argument: LR division factor k must be > 1");
  const double le = hp.lambda * hp.eta;
  const double raw = hp.alpha > 0.0
                         ? std::log(k) * (1.0 - hp.alpha) / (4.0 * le)
                         : std::log(k) / (4.0 * le);
  return static_cast<std::int64_t>(std::ceil(raw));
}

namespace {

void check_bound_args(double V, double l, double B, std::int64_t T) {
  if (!(l > 0.0)) throw std::invalid_argument("non-positive-l: lower bound l must be > 0");
  if (V < 0.0) throw std::invalid_argument("invalid-argument: V must be >= 0");
  if (B < 0.0) throw std::invalid_argument("invalid-argument: B must be >= 0");
  if (T < 0) throw std::invalid_argument("invalid-argument: T must be >= 0");
}

}  // namespace

double variance_bound_sgd(double V, double l, double B, std::int64_t T,
                          const HyperParams& hp) {
  hp.validate();
  check_bound_args(V, l, B, T);
  const double rate = 1.0 - 4.0 * hp.lambda * hp.eta;
  return std::pow(rate, static_cast<double>(T)) * B + V * hp.eta * hp.eta / l;
}

double variance_bound_sgdm(double V, double l, double B, std::int64_t T,
                           const HyperParams& hp) {
  hp.validate();
  check_bound_args(V, l, B, T);
  const double a = hp.alpha;
  const double rate = 1.0 - 4.0 * hp.lambda * hp.eta / (1.0 - a);
  const double coeff = (1.0 + 4.0 * a * a + a * a * a * a) /
                       ((1.0 - a) * (1.0 - a) * (1.0 - a) * (1.0 - a));
  return 3.0 * B * std::pow(rate, static_cast<double>(T)) +
         3.0 * V * hp.eta * hp.eta * coeff / l;
}

double variance_bound_sgdm_tightened(double V, double L, double B,
                                     std::int64_t T, const HyperParams& hp) {
  hp.validate();
  require_positive_L(L);
  check_bound_args(V, 1.0, B, T);
  const double a = hp.alpha;
  const double rate = 1.0 - 4.0 * hp.lambda * hp.eta / (1.0 - a);
  const double coeff = (1.0 + 4.0 * a * a + a * a * a * a) /
                       (2.0 * L * (1.0 - a) * (1.0 - a));
  return 3.0 * B * std::pow(rate, static_cast<double>(T)) +
         3.0 * V * hp.eta * hp.eta * coeff;
}

bool noise_floor_ok_sgd(double l, double L, const HyperParams& hp) {
  hp.validate();
  require_positive_L(L);
  if (!(l > 0.0)) throw std::invalid_argument("non-positive-l");
  const double le = hp.lambda * hp.eta;
  const double c = 2.0 * le / (1.0 - 2.0 * le);
  return l > 2.0 * c * c * L;
}

bool noise_floor_ok_sgdm(double l, double L, const HyperParams& hp) {
  hp.validate();
  require_positive_L(L);
  if (!(l > 0.0)) throw std::invalid_argument("non-positive-l");
  const double a = hp.alpha;
  const double le = hp.lambda * hp.eta;
  const double denom =
      (1.0 - a) * (1.0 - a) * (1.0 - a) * (1.0 + a) - 8.0 * le * (1.0 - a);
  if (!(denom > 0.0)) return false;
  const double c = 6.0 * le / denom;
  return l > 2.0 * c * c * L;
}

}  // namespace smd
