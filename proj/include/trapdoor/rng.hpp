#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace trapdoor {

/// The one generator used everywhere. Streams are split by hashing
/// (seed, stream) through splitmix64, so replication r of a grid can be
/// regenerated in isolation from `derive_seed(base, r)`.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

inline double draw_uniform(Rng& rng) {
  // (0,1) exclusive at both ends
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double draw_normal(Rng& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

/// Gamma with (shape, rate); mean shape / rate.
inline double draw_gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

inline double draw_beta(Rng& rng, double a, double b) {
  const double x = draw_gamma(rng, a, 1.0);
  const double y = draw_gamma(rng, b, 1.0);
  return x / (x + y);
}

inline bool draw_bernoulli(Rng& rng, double p) { return draw_uniform(rng) < p; }

/// Index drawn with probability proportional to `probs` (need not sum to 1).
inline std::size_t draw_categorical(Rng& rng, std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  double u = draw_uniform(rng) * total;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (u < probs[k]) return k;
    u -= probs[k];
  }
  return probs.size() - 1;
}

inline double logistic(double t) noexcept {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// log(logistic(t)), stable for large |t|.
inline double log_logistic(double t) noexcept {
  return t >= 0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

}  // namespace trapdoor
