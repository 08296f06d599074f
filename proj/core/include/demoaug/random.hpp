#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace demoaug {

using Rng = std::mt19937_64;

/// Derives an independent engine from a root seed and a path of stream
/// indices. Identical paths always give identical streams.
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto p : path) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return derive_rng(seed, path)();
}

/// Cheap stateless seed mixing (splitmix64 finalizer) for hot loops where
/// derive_rng's seed_seq setup would dominate.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Beta(a, b) variate via the ratio of two gamma draws.
inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : 0.5;
}

}  // namespace demoaug
