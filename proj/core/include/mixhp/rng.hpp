#pragma once

#include <cstdint>

namespace mixhp {

// Counter-based 64-bit generator (splitmix64). The state advances along a
// Weyl sequence and each output is a bijective hash of the counter, which
// makes substream derivation cheap and order-independent. Satisfies
// UniformRandomBitGenerator, so <random> distributions plug in directly.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Seed of the `stream`-th substream of `seed`. Replications, restarts and
// grid rows each get their own stream so parallel runs reproduce serial
// runs exactly.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  return g();
}

// Uniform double in [0, 1), 53 mantissa bits.
inline double uniform01(SplitMix64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace mixhp
