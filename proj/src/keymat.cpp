#include "keysvm/keymat.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "keysvm/rng.hpp"
#include "keysvm/sha256.hpp"

namespace keysvm {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::uint64_t seed_from_label(const std::vector<std::uint8_t>& master,
                              std::string_view label) {
  std::vector<std::uint8_t> buf(master);
  buf.insert(buf.end(), label.begin(), label.end());
  const Sha256Digest digest = sha256(buf);
  std::uint64_t seed = 0;
  for (int i = 7; i >= 0; --i) seed = (seed << 8) | digest[i];  // little-endian
  return seed;
}

}  // namespace

SecretKey SecretKey::from_bytes(std::vector<std::uint8_t> master) {
  if (master.size() < kMinMasterKeyBytes) {
    throw std::invalid_argument(
        "master key too short: " + std::to_string(master.size()) +
        " bytes, need at least " + std::to_string(kMinMasterKeyBytes));
  }
  SecretKey key;
  key.master_ = std::move(master);
  return key;
}

SecretKey SecretKey::from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw std::invalid_argument("hex key must have an even number of digits");
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = hex_digit(hex[i]);
    const int lo = hex_digit(hex[i + 1]);
    if (hi < 0 || lo < 0) {
      throw std::invalid_argument("invalid hex digit in key at position " +
                                  std::to_string(i));
    }
    bytes.push_back(std::uint8_t((hi << 4) | lo));
  }
  return from_bytes(std::move(bytes));
}

SubKeys derive_subkeys(const SecretKey& key) {
  if (!key.valid()) {
    throw std::invalid_argument("master key too short: " +
                                std::to_string(key.master().size()) +
                                " bytes, need at least " +
                                std::to_string(kMinMasterKeyBytes));
  }
  SubKeys sub;
  sub.block_perm = seed_from_label(key.master(), "K1");
  sub.pixel_shuffle = seed_from_label(key.master(), "K2");
  sub.bit_flip = seed_from_label(key.master(), "K3");
  return sub;
}

Permutation gen_permutation(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw std::invalid_argument("permutation size must be >= 1");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("permutation size too large");
  }
  Permutation v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::uint32_t(i);
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(v[i], v[j]);
  }
  return v;
}

Permutation invert_permutation(const Permutation& v) {
  Permutation inv(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) inv[v[i]] = std::uint32_t(i);
  return inv;
}

bool is_permutation(const Permutation& v) {
  std::vector<bool> seen(v.size(), false);
  for (std::uint32_t e : v) {
    if (e >= v.size() || seen[e]) return false;
    seen[e] = true;
  }
  return true;
}

std::vector<std::uint8_t> gen_flip_mask(std::uint64_t seed, std::size_t p) {
  if (p == 0) throw std::invalid_argument("flip mask length must be >= 1");
  std::vector<std::uint8_t> mask(p, 0);
  std::fill_n(mask.begin(), p / 2, std::uint8_t{1});
  SplitMix64 rng(seed);
  for (std::size_t i = p - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(mask[i], mask[j]);
  }
  return mask;
}

}  // namespace keysvm
