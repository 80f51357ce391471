#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace themetric {

// SplitMix64 finalizer. Used for seed derivation and stateless per-pair
// pseudo-random scores.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derive an independent substream seed from a master seed and a tag.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ull));
}

inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// mt19937_64 output is pinned by the standard; the std distributions are
// not, so every draw below is done by hand to keep runs byte-identical
// across library versions.
inline double uniform01(std::mt19937_64& g) { return bits_to_unit(g()); }

inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
  // rejection sampling, unbiased
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

inline double normal01(std::mt19937_64& g) {
  // polar Box-Muller, one value per call (the spare is discarded so the
  // stream position stays easy to reason about)
  for (;;) {
    const double u = 2.0 * uniform01(g) - 1.0;
    const double v = 2.0 * uniform01(g) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

template <class T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& g) {
  // Fisher-Yates; std::shuffle's draw sequence is implementation-defined
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace themetric
