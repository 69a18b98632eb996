#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace keysvm {

using Sha256Digest = std::array<std::uint8_t, 32>;

// FIPS 180-4 SHA-256. Used for subkey derivation and config fingerprints.
Sha256Digest sha256(std::span<const std::uint8_t> data);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace keysvm
