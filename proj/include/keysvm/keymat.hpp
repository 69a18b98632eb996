#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace keysvm {

inline constexpr std::size_t kMinMasterKeyBytes = 16;

// Master secret. The three transformation subkeys are derived from it, so a
// user only ever handles one key value.
class SecretKey {
 public:
  SecretKey() = default;  // empty, unusable until assigned from a factory

  // Throws std::invalid_argument when master is shorter than 16 bytes.
  static SecretKey from_bytes(std::vector<std::uint8_t> master);
  // Hex string, two digits per byte. Throws on odd length or bad digits.
  static SecretKey from_hex(std::string_view hex);

  const std::vector<std::uint8_t>& master() const { return master_; }
  bool valid() const { return master_.size() >= kMinMasterKeyBytes; }

 private:
  std::vector<std::uint8_t> master_;
};

// Seeds for the three keyed generators. Each is the first 8 bytes
// (little-endian) of SHA-256(master || label) with labels "K1" (block
// permutation), "K2" (pixel shuffle), "K3" (bit flip). Test vectors live in
// docs/FORMATS.md and tests/test_keymat.cpp.
struct SubKeys {
  std::uint64_t block_perm = 0;
  std::uint64_t pixel_shuffle = 0;
  std::uint64_t bit_flip = 0;
};

SubKeys derive_subkeys(const SecretKey& key);

// entries form a bijection on {0, ..., n-1}.
using Permutation = std::vector<std::uint32_t>;

// Fisher-Yates over SplitMix64(seed) with unbiased bounded draws.
// Deterministic per (seed, n). Throws when n == 0.
Permutation gen_permutation(std::uint64_t seed, std::size_t n);

Permutation invert_permutation(const Permutation& v);
bool is_permutation(const Permutation& v);

// Binary vector of length p with exactly floor(p/2) ones, positions chosen
// by a keyed shuffle. Deterministic per (seed, p). Throws when p == 0.
std::vector<std::uint8_t> gen_flip_mask(std::uint64_t seed, std::size_t p);

}  // namespace keysvm
