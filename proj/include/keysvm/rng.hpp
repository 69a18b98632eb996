#pragma once

#include <cstdint>

namespace keysvm {

// SplitMix64 (Steele/Lea/Vigna). Pure uint64 arithmetic, so a given seed
// produces the same stream on every platform. This is the generator behind
// every keyed permutation and mask in the library; transformed datasets are
// reproducible across implementations that follow the same byte-level rules
// (see docs/FORMATS.md).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, bound) by rejection sampling. bound >= 1.
  std::uint64_t next_below(std::uint64_t bound) {
    // 2^64 mod bound; draws below this would bias the modulo.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1) from the high 53 bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace keysvm
