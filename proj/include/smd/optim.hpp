#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "smd/theory.hpp"

namespace smd {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
double norm_sq(const Vec& v);
double norm(const Vec& v);

// Per-iteration measurement row for vector training trajectories.
struct StepRecord {
  std::int64_t iteration;
  double weight_norm;
  double angular_update;  // radians, in [0, pi]
  double unit_grad_norm_sq;
  std::optional<double> h_tilde;  // SGDM only
  double lr;
};

// w_{t+1} = w_t - eta (g_t + lambda w_t). No implicit normalization.
Vec sgd_step(const Vec& w, const Vec& g, const HyperParams& hp);

// Heavy-ball: v_t = alpha v_{t-1} + g_t + lambda w_t; w_{t+1} = w_t - eta v_t.
std::pair<Vec, Vec> sgdm_step(const Vec& w, const Vec& v, const Vec& g,
                              const HyperParams& hp);

// arccos(<a, b> / (||a|| ||b||)), cosine clamped to [-1, 1].
double angular_update(const Vec& w_before, const Vec& w_after);

// Same formula applied to distant iterates w_t, w_{t+k}.
double accumulated_angular_update(const Vec& w_t, const Vec& w_t_plus_k);

// ||g||^2 * ||w||^2, the squared norm of the unit gradient g * ||w||.
double unit_gradient_norm_sq(const Vec& w, const Vec& g);

// h_t = ||g||^2 + 2 alpha <v_prev, g>; returns (h_t, h_t * ||w||^2).
std::pair<double, double> h_statistic(const Vec& g, const Vec& v_prev,
                                      const Vec& w, double alpha);

}  // namespace smd
