#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smd/optim.hpp"

namespace smd {

// Rayleigh quotient loss L(w) = w^T M w / ||w||^2 with M symmetric PSD.
// Scale-invariant by construction; the gradient is analytic and
// deterministic, giving a clean constant-L forcing regime.
class RayleighModel {
 public:
  // m is row-major p x p; must be symmetric to 1e-12.
  RayleighModel(std::vector<double> m, int p);

  // Random PSD matrix M = A^T A / p with A standard normal.
  static RayleighModel random(int p, std::uint64_t seed);

  double loss(const Vec& w) const;

  // 2 (M w - L(w) w) / ||w||^2.
  Vec grad(const Vec& w) const;

  int dim() const { return p_; }

 private:
  std::vector<double> m_;
  int p_;
};

// n samples of (feature vector in R^p, scalar target). Import/export as a
// columnar text format, one sample per line: p feature values then the
// target, space-separated.
struct Dataset {
  int n = 0;
  int p = 0;
  std::vector<double> features;  // row-major n x p
  std::vector<double> targets;   // n

  void save(const std::string& path) const;
  static Dataset load(const std::string& path);
};

// Features from a seeded standard normal, targets from a planted
// normalized-linear teacher plus Gaussian noise of std dev noise_sigma.
Dataset make_synthetic_dataset(int n, int p, double gamma, double noise_sigma,
                               std::uint64_t seed);

struct StochasticGradient {
  Vec g;
  std::vector<int> batch_indices;
};

// Mean squared error through the normalized prediction
// yhat = gamma * x^T w / ||w||, so the loss is scale-invariant in w.
// gamma is held fixed (not trained).
class NormalizedLinearModel {
 public:
  NormalizedLinearModel(Dataset data, double gamma, int batch_size,
                        std::uint64_t seed);

  // Analytic gradient of the minibatch MSE; the batch is keyed by (seed, t)
  // so repeated calls with the same t return the identical gradient. When
  // batch_size >= n the full dataset is used and t is ignored.
  StochasticGradient minibatch_grad(const Vec& w, std::int64_t t) const;

  double batch_loss(const Vec& w, const std::vector<int>& indices) const;
  std::vector<int> batch_indices(std::int64_t t) const;

  const Dataset& data() const { return data_; }
  double gamma() const { return gamma_; }
  int batch_size() const { return batch_size_; }

 private:
  Dataset data_;
  double gamma_;
  int batch_size_;
  std::uint64_t seed_;
};

// Certification of the two scale-invariance identities: perpendicularity
// <w, g> = 0 and gradient scaling g(k w) = g(w) / k. Violations are
// reported (relative), never thrown.
struct Lemma1Report {
  double max_perp_violation;
  double max_scaling_violation;
};

Lemma1Report lemma1_certify(const std::function<Vec(const Vec&)>& grad_fn,
                            const Vec& w, const std::vector<double>& k_values);

}  // namespace smd
