#include "smd/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "smd/rng.hpp"

namespace smd {

RayleighModel::RayleighModel(std::vector<double> m, int p) : m_(std::move(m)), p_(p) {
  if (p < 2) throw std::invalid_argument("invalid-model: dimension must be >= 2");
  if (m_.size() != static_cast<std::size_t>(p) * p)
    throw std::invalid_argument("invalid-model: matrix size mismatch");
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j)
      if (std::abs(m_[i * p + j] - m_[j * p + i]) > 1e-12)
        throw std::invalid_argument("invalid-model: matrix not symmetric");
}

RayleighModel RayleighModel::random(int p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> a(static_cast<std::size_t>(p) * p);
  for (auto& v : a) v = rng.gaussian();
  std::vector<double> m(static_cast<std::size_t>(p) * p, 0.0);
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      double s = 0.0;
      for (int k = 0; k < p; ++k) s += a[k * p + i] * a[k * p + j];
      m[i * p + j] = m[j * p + i] = s / p;
    }
  return RayleighModel(std::move(m), p);
}

double RayleighModel::loss(const Vec& w) const {
  if (w.size() != static_cast<std::size_t>(p_))
    throw std::invalid_argument("dimension-mismatch");
  const double x = norm_sq(w);
  if (!(x > 0.0)) throw std::domain_error("zero-norm-input");
  double q = 0.0;
  for (int i = 0; i < p_; ++i) {
    double row = 0.0;
    for (int j = 0; j < p_; ++j) row += m_[i * p_ + j] * w[j];
    q += w[i] * row;
  }
  return q / x;
}

Vec RayleighModel::grad(const Vec& w) const {
  if (w.size() != static_cast<std::size_t>(p_))
    throw std::invalid_argument("dimension-mismatch");
  const double x = norm_sq(w);
  if (!(x > 0.0)) throw std::domain_error("zero-norm-input");
  Vec mw(p_, 0.0);
  for (int i = 0; i < p_; ++i) {
    double row = 0.0;
    for (int j = 0; j < p_; ++j) row += m_[i * p_ + j] * w[j];
    mw[i] = row;
  }
  double q = 0.0;
  for (int i = 0; i < p_; ++i) q += w[i] * mw[i];
  const double l = q / x;
  Vec g(p_);
  for (int i = 0; i < p_; ++i) g[i] = 2.0 * (mw[i] - l * w[i]) / x;
  return g;
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open dataset file for writing: " + path);
  out.precision(17);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) out << features[i * p + j] << ' ';
    out << targets[i] << '\n';
  }
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  Dataset d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::vector<double> vals;
    double v;
    while (row >> v) vals.push_back(v);
    if (vals.size() < 2)
      throw std::runtime_error("malformed dataset line: " + line);
    if (d.p == 0)
      d.p = static_cast<int>(vals.size()) - 1;
    else if (vals.size() != static_cast<std::size_t>(d.p) + 1)
      throw std::runtime_error("ragged dataset row: " + line);
    d.features.insert(d.features.end(), vals.begin(), vals.end() - 1);
    d.targets.push_back(vals.back());
    ++d.n;
  }
  return d;
}

Dataset make_synthetic_dataset(int n, int p, double gamma, double noise_sigma,
                               std::uint64_t seed) {
  if (n < 1 || p < 2) throw std::invalid_argument("invalid dataset shape");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  SplitMix64 rng(derive_seed(seed, 0));
  Dataset d;
  d.n = n;
  d.p = p;
  d.features.resize(static_cast<std::size_t>(n) * p);
  for (auto& v : d.features) v = rng.gaussian();

  SplitMix64 teacher_rng(derive_seed(seed, 1));
  Vec teacher(p);
  for (auto& v : teacher) v = teacher_rng.gaussian();
  const double tn = norm(teacher);
  for (auto& v : teacher) v /= tn;

  d.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < p; ++j) s += d.features[i * p + j] * teacher[j];
    d.targets[i] = gamma * s + noise_sigma * teacher_rng.gaussian();
  }
  return d;
}

NormalizedLinearModel::NormalizedLinearModel(Dataset data, double gamma,
                                             int batch_size, std::uint64_t seed)
    : data_(std::move(data)), gamma_(gamma), batch_size_(batch_size), seed_(seed) {
  if (data_.n < 1) throw std::invalid_argument("empty-dataset");
  if (batch_size_ < 1) throw std::invalid_argument("batch size must be >= 1");
}

std::vector<int> NormalizedLinearModel::batch_indices(std::int64_t t) const {
  if (batch_size_ >= data_.n) {
    std::vector<int> all(data_.n);
    for (int i = 0; i < data_.n; ++i) all[i] = i;
    return all;
  }
  SplitMix64 rng(derive_seed(seed_, static_cast<std::uint64_t>(t)));
  std::vector<int> idx(batch_size_);
  for (auto& i : idx)
    i = static_cast<int>(rng.next() % static_cast<std::uint64_t>(data_.n));
  return idx;
}

double NormalizedLinearModel::batch_loss(const Vec& w,
                                         const std::vector<int>& indices) const {
  if (w.size() != static_cast<std::size_t>(data_.p))
    throw std::invalid_argument("dimension-mismatch");
  const double wn = norm(w);
  if (!(wn > 0.0)) throw std::domain_error("zero-norm-input");
  double loss = 0.0;
  for (int i : indices) {
    double s = 0.0;
    for (int j = 0; j < data_.p; ++j) s += data_.features[i * data_.p + j] * w[j];
    const double r = gamma_ * s / wn - data_.targets[i];
    loss += r * r;
  }
  return loss / static_cast<double>(indices.size());
}

StochasticGradient NormalizedLinearModel::minibatch_grad(const Vec& w,
                                                         std::int64_t t) const {
  if (w.size() != static_cast<std::size_t>(data_.p))
    throw std::invalid_argument("dimension-mismatch");
  const double wn = norm(w);
  if (!(wn > 0.0)) throw std::domain_error("zero-norm-input");

  StochasticGradient sg;
  sg.batch_indices = batch_indices(t);
  sg.g.assign(data_.p, 0.0);

  // d yhat_i / dw = (gamma/||w||) (x_i - (x_i . what) what), perpendicular
  // to w per sample.
  const double inv_b = 1.0 / static_cast<double>(sg.batch_indices.size());
  Vec what(data_.p);
  for (int j = 0; j < data_.p; ++j) what[j] = w[j] / wn;
  for (int i : sg.batch_indices) {
    double s = 0.0;
    for (int j = 0; j < data_.p; ++j) s += data_.features[i * data_.p + j] * what[j];
    const double r = gamma_ * s - data_.targets[i];
    const double c = 2.0 * inv_b * r * gamma_ / wn;
    for (int j = 0; j < data_.p; ++j)
      sg.g[j] += c * (data_.features[i * data_.p + j] - s * what[j]);
  }
  return sg;
}

Lemma1Report lemma1_certify(const std::function<Vec(const Vec&)>& grad_fn,
                            const Vec& w, const std::vector<double>& k_values) {
  const Vec g0 = grad_fn(w);
  const double wn = norm(w);
  const double g0n = norm(g0);
  Lemma1Report report{0.0, 0.0};
  if (g0n > 0.0 && wn > 0.0)
    report.max_perp_violation = std::abs(dot(w, g0)) / (wn * g0n);

  for (double k : k_values) {
    if (!(k > 0.0)) throw std::invalid_argument("k values must be > 0");
    Vec scaled(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = k * w[i];
    const Vec gk = grad_fn(scaled);
    double diff_sq = 0.0;
    double ref_sq = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double expected = g0[i] / k;
      diff_sq += (gk[i] - expected) * (gk[i] - expected);
      ref_sq += expected * expected;
    }
    const double viol =
        ref_sq > 0.0 ? std::sqrt(diff_sq / ref_sq) : std::sqrt(diff_sq);
    report.max_scaling_violation = std::max(report.max_scaling_violation, viol);

    const double gkn = norm(gk);
    const double skn = norm(scaled);
    if (gkn > 0.0 && skn > 0.0)
      report.max_perp_violation = std::max(
          report.max_perp_violation, std::abs(dot(scaled, gk)) / (skn * gkn));
  }
  return report;
}

}  // namespace smd
