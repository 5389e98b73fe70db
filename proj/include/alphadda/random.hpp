#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace alphadda {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; derives independent child seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline int uniform_index(Rng& rng, std::size_t n) {
  return static_cast<int>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
}

template <typename T>
const T& pick_uniform(Rng& rng, const std::vector<T>& items) {
  return items[uniform_index(rng, items.size())];
}

/// Symmetric Dirichlet sample of dimension n.
inline std::vector<double> sample_dirichlet(Rng& rng, std::size_t n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> x(n);
  double sum = 0.0;
  for (auto& v : x) sum += (v = gamma(rng));
  if (sum <= 0.0) {
    for (auto& v : x) v = 1.0 / static_cast<double>(n);
    return x;
  }
  for (auto& v : x) v /= sum;
  return x;
}

}  // namespace alphadda
