#pragma once

#include <cmath>
#include <cstdint>

namespace smd {

// splitmix64 mixer (Steele/Lea/Vigna). Used as a stateless hash so that
// individual draws can be keyed by (seed, t) and trajectories stay
// random-access reproducible.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed, e.g. one per Monte Carlo trial.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
}

// Uniform draw in [0, 1) keyed by (seed, t). No carried state.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t t) {
  const std::uint64_t bits =
      splitmix64(splitmix64(seed) ^ splitmix64(t + 0x2545F4914F6CDD1DULL));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential splitmix64 generator. Gaussians are produced by Box-Muller on
// the generator's own uniforms so traces are byte-identical across
// standard-library implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; the second sample of each pair is cached.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace smd
