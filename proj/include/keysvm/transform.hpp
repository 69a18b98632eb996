#pragma once

#include <cstdint>
#include <vector>

#include "keysvm/image.hpp"
#include "keysvm/keymat.hpp"

namespace keysvm {

inline constexpr int kPixelBits = 8;
inline constexpr int kPixelMax = 255;
// Positions whose training std falls below this normalize to 0.
inline constexpr double kStdEpsilon = 1e-12;

// Per-position statistics over a training set. stddev is the population
// standard deviation (divide by N, not N-1).
struct NormStats {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }
  std::size_t size() const { return mean.size(); }
};

struct StepToggles {
  bool block_permutation = true;
  bool pixel_shuffle = true;
  bool bit_flip = true;
  bool zscore = true;

  bool operator==(const StepToggles&) const = default;
};

struct TransformConfig {
  int block_size = 2;
  StepToggles steps;
  SecretKey key;
};

// Gather semantics: output block k is input block v[k]. |v| must equal the
// block count.
BlockGrid permute_blocks(const BlockGrid& grid, const Permutation& v);

// Gather semantics on a flattened block. The same vector (from K2) is
// applied to every block of every image.
std::vector<double> shuffle_pixels(const std::vector<double>& block,
                                   const Permutation& v);

// Negative-positive transform: where mask is 1, x -> x XOR 255. Values must
// be integers in [0, 255]; the same mask (from K3) is applied to every block
// of every image.
std::vector<double> flip_bits(const std::vector<double>& block,
                              const std::vector<std::uint8_t>& mask);

// Requires N >= 2 images of identical shape.
NormStats zscore_fit(const std::vector<ImageTensor>& images);

// (x - mean) / std per position; positions with std < kStdEpsilon map to 0.
ImageTensor zscore_apply(const ImageTensor& image, const NormStats& stats);

struct TransformResult {
  std::vector<ImageTensor> images;
  // Stats fitted on the post-bit-flip data (training) or the stats that were
  // passed in (testing). Empty when the z-score step is disabled and no
  // stats were provided.
  NormStats stats;
};

// Applies the enabled steps in pipeline order: block permutation, pixel
// shuffling, bit flipping, z-score normalization. When stats is null and
// z-score is enabled, stats are fitted on the transformed training images;
// otherwise the provided stats are applied.
TransformResult transform_dataset(const std::vector<ImageTensor>& images,
                                  const TransformConfig& config,
                                  const NormStats* stats = nullptr);

// Raster positions the pipeline bit-flips: the block-level mask replicated
// over the block grid. Used by the invariant suites.
std::vector<std::uint8_t> flip_position_mask(
    int height, int width, int channels, int block_size,
    const std::vector<std::uint8_t>& mask);

}  // namespace keysvm
