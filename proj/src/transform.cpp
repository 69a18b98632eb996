#include "keysvm/transform.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace keysvm {

BlockGrid permute_blocks(const BlockGrid& grid, const Permutation& v) {
  if (v.size() != grid.block_count()) {
    throw std::invalid_argument(
        "permutation length " + std::to_string(v.size()) +
        " does not match block count " + std::to_string(grid.block_count()));
  }
  BlockGrid out = grid;
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.blocks[k] = grid.blocks[v[k]];
  }
  return out;
}

std::vector<double> shuffle_pixels(const std::vector<double>& block,
                                   const Permutation& v) {
  if (v.size() != block.size()) {
    throw std::invalid_argument(
        "permutation length " + std::to_string(v.size()) +
        " does not match block length " + std::to_string(block.size()));
  }
  std::vector<double> out(block.size());
  for (std::size_t l = 0; l < v.size(); ++l) {
    out[l] = block[v[l]];
  }
  return out;
}

std::vector<double> flip_bits(const std::vector<double>& block,
                              const std::vector<std::uint8_t>& mask) {
  if (mask.size() != block.size()) {
    throw std::invalid_argument(
        "mask length " + std::to_string(mask.size()) +
        " does not match block length " + std::to_string(block.size()));
  }
  std::vector<double> out(block.size());
  for (std::size_t l = 0; l < block.size(); ++l) {
    const double value = block[l];
    if (!(value >= 0.0 && value <= kPixelMax) || std::floor(value) != value) {
      throw std::invalid_argument("pixel value " + std::to_string(value) +
                                  " is not an integer in [0, 255]");
    }
    out[l] = mask[l] ? double(int(value) ^ kPixelMax) : value;
  }
  return out;
}

NormStats zscore_fit(const std::vector<ImageTensor>& images) {
  if (images.size() < 2) {
    throw std::invalid_argument("z-score fit needs at least 2 images, got " +
                                std::to_string(images.size()));
  }
  const ImageTensor& first = images.front();
  for (const auto& img : images) {
    if (!img.same_shape(first)) {
      throw std::invalid_argument("z-score fit: image dimensions differ");
    }
  }

  const std::size_t d = first.size();
  const double n = double(images.size());
  NormStats stats;
  stats.height = first.height;
  stats.width = first.width;
  stats.channels = first.channels;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);

  for (const auto& img : images) {
    for (std::size_t t = 0; t < d; ++t) stats.mean[t] += img.data[t];
  }
  for (std::size_t t = 0; t < d; ++t) stats.mean[t] /= n;

  for (const auto& img : images) {
    for (std::size_t t = 0; t < d; ++t) {
      const double dev = img.data[t] - stats.mean[t];
      stats.stddev[t] += dev * dev;
    }
  }
  for (std::size_t t = 0; t < d; ++t) {
    stats.stddev[t] = std::sqrt(stats.stddev[t] / n);  // population std
  }
  return stats;
}

ImageTensor zscore_apply(const ImageTensor& image, const NormStats& stats) {
  if (image.height != stats.height || image.width != stats.width ||
      image.channels != stats.channels) {
    throw std::invalid_argument("z-score apply: image does not match stats");
  }
  ImageTensor out = image;
  for (std::size_t t = 0; t < out.data.size(); ++t) {
    out.data[t] = stats.stddev[t] < kStdEpsilon
                      ? 0.0
                      : (image.data[t] - stats.mean[t]) / stats.stddev[t];
  }
  return out;
}

TransformResult transform_dataset(const std::vector<ImageTensor>& images,
                                  const TransformConfig& config,
                                  const NormStats* stats) {
  if (images.empty()) throw std::invalid_argument("empty image set");
  const ImageTensor& first = images.front();
  for (const auto& img : images) {
    if (!img.same_shape(first)) {
      throw std::invalid_argument("transform: image dimensions differ");
    }
  }

  const StepToggles& steps = config.steps;
  const bool keyed =
      steps.block_permutation || steps.pixel_shuffle || steps.bit_flip;

  Permutation block_perm;
  Permutation pixel_perm;
  std::vector<std::uint8_t> mask;
  if (keyed) {
    const SubKeys keys = derive_subkeys(config.key);
    const BlockGrid probe = segment(first, config.block_size);
    if (steps.block_permutation) {
      block_perm = gen_permutation(keys.block_perm, probe.block_count());
    }
    if (steps.pixel_shuffle) {
      pixel_perm = gen_permutation(keys.pixel_shuffle, probe.pixels_per_block());
    }
    if (steps.bit_flip) {
      mask = gen_flip_mask(keys.bit_flip, probe.pixels_per_block());
    }
  }

  TransformResult result;
  result.images.reserve(images.size());
  for (const auto& img : images) {
    if (!keyed) {
      result.images.push_back(img);
      continue;
    }
    BlockGrid grid = segment(img, config.block_size);
    if (steps.block_permutation) grid = permute_blocks(grid, block_perm);
    for (auto& block : grid.blocks) {
      if (steps.pixel_shuffle) block = shuffle_pixels(block, pixel_perm);
      if (steps.bit_flip) block = flip_bits(block, mask);
    }
    result.images.push_back(assemble(grid));
  }

  if (steps.zscore) {
    result.stats = stats ? *stats : zscore_fit(result.images);
    for (auto& img : result.images) {
      img = zscore_apply(img, result.stats);
    }
  } else if (stats) {
    result.stats = *stats;
  }
  return result;
}

std::vector<std::uint8_t> flip_position_mask(
    int height, int width, int channels, int block_size,
    const std::vector<std::uint8_t>& mask) {
  if (height % block_size != 0 || width % block_size != 0) {
    throw std::invalid_argument("block size does not divide dimensions");
  }
  const std::size_t p =
      std::size_t(block_size) * block_size * channels;
  if (mask.size() != p) {
    throw std::invalid_argument("mask length does not match block size");
  }
  std::vector<std::uint8_t> out(std::size_t(height) * width * channels, 0);
  for (int br = 0; br < height / block_size; ++br) {
    for (int bc = 0; bc < width / block_size; ++bc) {
      std::size_t l = 0;
      for (int r = 0; r < block_size; ++r) {
        for (int c = 0; c < block_size; ++c) {
          for (int ch = 0; ch < channels; ++ch) {
            const std::size_t t =
                (std::size_t(br * block_size + r) * width +
                 (bc * block_size + c)) *
                    channels +
                ch;
            out[t] = mask[l++];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace keysvm
