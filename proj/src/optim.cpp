#include "smd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smd {

namespace {

void check_dims(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dimension-mismatch");
}

void check_nonzero(double n) {
  if (!(n > 0.0)) throw std::domain_error("zero-norm-input");
}

}  // namespace

double dot(const Vec& a, const Vec& b) {
  check_dims(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const Vec& v) { return dot(v, v); }

double norm(const Vec& v) { return std::sqrt(norm_sq(v)); }

Vec sgd_step(const Vec& w, const Vec& g, const HyperParams& hp) {
  validate_for_step(hp);
  check_dims(w, g);
  Vec out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out[i] = w[i] - hp.eta * (g[i] + hp.lambda * w[i]);
  return out;
}

std::pair<Vec, Vec> sgdm_step(const Vec& w, const Vec& v, const Vec& g,
                              const HyperParams& hp) {
  validate_for_step(hp);
  check_dims(w, g);
  check_dims(w, v);
  Vec v_next(w.size());
  Vec w_next(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    v_next[i] = hp.alpha * v[i] + g[i] + hp.lambda * w[i];
    w_next[i] = w[i] - hp.eta * v_next[i];
  }
  return {std::move(w_next), std::move(v_next)};
}

double angular_update(const Vec& w_before, const Vec& w_after) {
  const double na = norm(w_before);
  const double nb = norm(w_after);
  check_nonzero(na);
  check_nonzero(nb);
  const double c = std::clamp(dot(w_before, w_after) / (na * nb), -1.0, 1.0);
  return std::acos(c);
}

double accumulated_angular_update(const Vec& w_t, const Vec& w_t_plus_k) {
  return angular_update(w_t, w_t_plus_k);
}

double unit_gradient_norm_sq(const Vec& w, const Vec& g) {
  const double wn2 = norm_sq(w);
  check_nonzero(wn2);
  return norm_sq(g) * wn2;
}

std::pair<double, double> h_statistic(const Vec& g, const Vec& v_prev,
                                      const Vec& w, double alpha) {
  check_dims(g, v_prev);
  check_dims(g, w);
  const double h = norm_sq(g) + 2.0 * alpha * dot(v_prev, g);
  return {h, h * norm_sq(w)};
}

}  // namespace smd
