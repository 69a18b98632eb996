#pragma once

#include <cstddef>
#include <vector>

namespace keysvm {

// H x W x C raster, row-major with the channel index fastest:
// data[(row * width + col) * channels + ch].
// Integer-domain images keep values in [0, 255]; z-scored images are real.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  static ImageTensor zeros(int height, int width, int channels);

  double& at(int row, int col, int ch) {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  double at(int row, int col, int ch) const {
    return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
  }
  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageTensor& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
};

// M x M x C blocks in raster order over the block grid (block rows, then
// block columns). Each block is flattened with the same row-major /
// channel-fastest rule as ImageTensor.
struct BlockGrid {
  int block_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int channels = 1;
  std::vector<std::vector<double>> blocks;

  std::size_t block_count() const { return blocks.size(); }
  std::size_t pixels_per_block() const {
    return static_cast<std::size_t>(block_size) * block_size * channels;
  }
};

// Throws std::invalid_argument when block_size does not divide both image
// dimensions (the message names the offending dimensions).
BlockGrid segment(const ImageTensor& image, int block_size);

// Inverse of segment. Throws on inconsistent block sizes.
ImageTensor assemble(const BlockGrid& grid);

}  // namespace keysvm
