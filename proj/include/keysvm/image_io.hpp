#pragma once

#include <filesystem>

#include "keysvm/image.hpp"

namespace keysvm {

// Decodes PNG (8-bit gray or RGB) and binary PGM/PPM (P5/P6, maxval 255).
// The format is detected from the file signature, not the extension.
ImageTensor read_image(const std::filesystem::path& path);

// P5 for single-channel, P6 for 3-channel. Pixels must be integers in
// [0, 255].
void write_pnm(const ImageTensor& image, const std::filesystem::path& path);

void write_png(const ImageTensor& image, const std::filesystem::path& path);

// BT.601 luma (0.299 R + 0.587 G + 0.114 B), rounded. Single-channel input
// passes through.
ImageTensor to_grayscale(const ImageTensor& image);

}  // namespace keysvm
