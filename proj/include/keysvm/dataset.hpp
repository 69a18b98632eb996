#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "keysvm/image.hpp"

namespace keysvm {

// Uniform-dimension image set. labels index into class_names.
struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  int class_count() const { return static_cast<int>(class_names.size()); }
};

struct LoadOptions {
  bool strict = true;      // fail on an undecodable file vs warn and skip
  bool grayscale = true;   // collapse RGB to luma
  int resize_height = 0;   // 0 = keep source dimensions
  int resize_width = 0;
};

// Layout: root/<class_name>/*.png|pgm|ppm. Classes and files are visited in
// lexicographic order, so repeated loads give identical datasets. Requires
// at least 2 class directories, each with at least one decodable image.
LabeledDataset load_directory(const std::filesystem::path& root,
                              const LoadOptions& options = {});

// Bilinear interpolation over pixel centers, rounded back to [0, 255]
// integers. Resizing to the source size is the identity.
ImageTensor resize_bilinear(const ImageTensor& image, int out_height,
                            int out_width);

struct SplitSpec {
  int train_per_class = 0;
  int test_per_class = 0;

  bool operator==(const SplitSpec&) const = default;
};

// First train_per_class images of each class (in dataset order) go to
// train, the next test_per_class to test. Throws naming the class when it
// has too few images.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                const SplitSpec& spec);

// Synthetic stand-in for a face corpus: per class a smooth random base image
// plus bounded Gaussian perturbations per sample, clamped to [0, 255].
// Bases are regenerated until every pairwise base distance is at least
// 4 * noise_sigma * sqrt(d), which keeps classes separable by construction.
struct SynthSpec {
  int classes = 10;
  int per_class = 40;
  int height = 20;
  int width = 20;
  std::uint64_t seed = 1;
  double noise_sigma = 8.0;
  int control_grid = 4;  // control points per side for the smooth base

  bool operator==(const SynthSpec&) const = default;
};

LabeledDataset synth_faces(const SynthSpec& spec);

// Images flattened to feature vectors in raster order.
std::vector<std::vector<double>> flatten_images(
    const std::vector<ImageTensor>& images);

}  // namespace keysvm
