#include "keysvm/image.hpp"

#include <stdexcept>
#include <string>

namespace keysvm {

ImageTensor ImageTensor::zeros(int height, int width, int channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  ImageTensor img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.data.assign(std::size_t(height) * width * channels, 0.0);
  return img;
}

BlockGrid segment(const ImageTensor& image, int block_size) {
  if (block_size < 1) throw std::invalid_argument("block size must be >= 1");
  if (image.height % block_size != 0 || image.width % block_size != 0) {
    throw std::invalid_argument(
        "block size " + std::to_string(block_size) +
        " does not divide image dimensions " + std::to_string(image.height) +
        "x" + std::to_string(image.width));
  }
  BlockGrid grid;
  grid.block_size = block_size;
  grid.grid_rows = image.height / block_size;
  grid.grid_cols = image.width / block_size;
  grid.channels = image.channels;
  grid.blocks.reserve(std::size_t(grid.grid_rows) * grid.grid_cols);

  const int C = image.channels;
  for (int br = 0; br < grid.grid_rows; ++br) {
    for (int bc = 0; bc < grid.grid_cols; ++bc) {
      std::vector<double> block;
      block.reserve(grid.pixels_per_block());
      for (int r = 0; r < block_size; ++r) {
        for (int c = 0; c < block_size; ++c) {
          for (int ch = 0; ch < C; ++ch) {
            block.push_back(
                image.at(br * block_size + r, bc * block_size + c, ch));
          }
        }
      }
      grid.blocks.push_back(std::move(block));
    }
  }
  return grid;
}

ImageTensor assemble(const BlockGrid& grid) {
  if (grid.block_size < 1 || grid.grid_rows < 1 || grid.grid_cols < 1) {
    throw std::invalid_argument("malformed block grid");
  }
  if (grid.blocks.size() !=
      std::size_t(grid.grid_rows) * std::size_t(grid.grid_cols)) {
    throw std::invalid_argument("block count does not match grid shape");
  }
  const std::size_t p = grid.pixels_per_block();
  for (const auto& block : grid.blocks) {
    if (block.size() != p) {
      throw std::invalid_argument("inconsistent block size in grid");
    }
  }

  const int M = grid.block_size;
  const int C = grid.channels;
  ImageTensor image =
      ImageTensor::zeros(grid.grid_rows * M, grid.grid_cols * M, C);
  for (int br = 0; br < grid.grid_rows; ++br) {
    for (int bc = 0; bc < grid.grid_cols; ++bc) {
      const auto& block = grid.blocks[std::size_t(br) * grid.grid_cols + bc];
      std::size_t l = 0;
      for (int r = 0; r < M; ++r) {
        for (int c = 0; c < M; ++c) {
          for (int ch = 0; ch < C; ++ch) {
            image.at(br * M + r, bc * M + c, ch) = block[l++];
          }
        }
      }
    }
  }
  return image;
}

}  // namespace keysvm
