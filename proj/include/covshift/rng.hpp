#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace covshift {

// splitmix64 finalizer. Used to spread user seeds and to derive substream
// tags; good enough avalanche that consecutive tags give unrelated streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded random stream. Substreams derived via child() depend only on
// (seed, tag), never on how many draws happened before, so independent
// tasks can be seeded up front and run in any order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  Rng child(std::uint64_t tag) const { return Rng(mix64(seed_ ^ mix64(tag))); }

  std::uint64_t seed() const { return seed_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal() { return normal_(engine_); }

  // Uniform index in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Order-insensitive tag for a feature subset (callers pass sorted indices
// so permuting candidate evaluation order cannot change the derived seed).
inline std::uint64_t subset_tag(std::span<const int> sorted_indices) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (int idx : sorted_indices) {
    h = mix64(h ^ static_cast<std::uint64_t>(idx + 1));
  }
  return h;
}

}  // namespace covshift
