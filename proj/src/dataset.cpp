#include "keysvm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "keysvm/image_io.hpp"
#include "keysvm/rng.hpp"

namespace keysvm {

namespace {

bool has_image_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm";
}

}  // namespace

LabeledDataset load_directory(const std::filesystem::path& root,
                              const LoadOptions& options) {
  if (!std::filesystem::is_directory(root)) {
    throw std::runtime_error(root.string() + ": not a directory");
  }

  std::vector<std::filesystem::path> class_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.size() < 2) {
    throw std::runtime_error(root.string() +
                             ": need at least 2 class subdirectories, found " +
                             std::to_string(class_dirs.size()));
  }

  LabeledDataset dataset;
  for (const auto& dir : class_dirs) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());

    const int label = int(dataset.class_names.size());
    dataset.class_names.push_back(dir.filename().string());

    std::size_t loaded = 0;
    for (const auto& file : files) {
      ImageTensor img;
      try {
        img = read_image(file);
      } catch (const std::exception& e) {
        if (options.strict) throw;
        std::cerr << "warning: skipping " << file.string() << ": " << e.what()
                  << "\n";
        continue;
      }
      if (options.grayscale) img = to_grayscale(img);
      if (options.resize_height > 0 && options.resize_width > 0) {
        img = resize_bilinear(img, options.resize_height, options.resize_width);
      }
      if (!dataset.images.empty() && !img.same_shape(dataset.images.front())) {
        throw std::runtime_error(
            file.string() +
            ": image dimensions differ from the rest of the dataset "
            "(use a resize option)");
      }
      dataset.images.push_back(std::move(img));
      dataset.labels.push_back(label);
      ++loaded;
    }
    if (loaded == 0) {
      throw std::runtime_error(dir.string() + ": class has no decodable images");
    }
  }
  return dataset;
}

ImageTensor resize_bilinear(const ImageTensor& image, int out_height,
                            int out_width) {
  if (out_height < 1 || out_width < 1) {
    throw std::invalid_argument("resize target must be at least 1x1");
  }
  if (out_height == image.height && out_width == image.width) return image;

  ImageTensor out = ImageTensor::zeros(out_height, out_width, image.channels);
  const double scale_r = double(image.height) / out_height;
  const double scale_c = double(image.width) / out_width;
  for (int r = 0; r < out_height; ++r) {
    // Pixel-center mapping; at scale 1 this reduces to the identity.
    double src_r = (r + 0.5) * scale_r - 0.5;
    src_r = std::clamp(src_r, 0.0, double(image.height - 1));
    const int r0 = int(src_r);
    const int r1 = std::min(r0 + 1, image.height - 1);
    const double fr = src_r - r0;
    for (int c = 0; c < out_width; ++c) {
      double src_c = (c + 0.5) * scale_c - 0.5;
      src_c = std::clamp(src_c, 0.0, double(image.width - 1));
      const int c0 = int(src_c);
      const int c1 = std::min(c0 + 1, image.width - 1);
      const double fc = src_c - c0;
      for (int ch = 0; ch < image.channels; ++ch) {
        const double top = image.at(r0, c0, ch) * (1.0 - fc) +
                           image.at(r0, c1, ch) * fc;
        const double bottom = image.at(r1, c0, ch) * (1.0 - fc) +
                              image.at(r1, c1, ch) * fc;
        const double value = top * (1.0 - fr) + bottom * fr;
        out.at(r, c, ch) = std::clamp(std::round(value), 0.0, 255.0);
      }
    }
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset,
                                                const SplitSpec& spec) {
  if (spec.train_per_class < 0 || spec.test_per_class < 0) {
    throw std::invalid_argument("split counts must be non-negative");
  }
  LabeledDataset train, test;
  train.class_names = dataset.class_names;
  test.class_names = dataset.class_names;

  for (int cls = 0; cls < dataset.class_count(); ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.labels[i] == cls) members.push_back(i);
    }
    const std::size_t need =
        std::size_t(spec.train_per_class) + spec.test_per_class;
    if (members.size() < need) {
      throw std::runtime_error("class " + dataset.class_names[cls] +
                               " has " + std::to_string(members.size()) +
                               " images, split needs " + std::to_string(need));
    }
    for (int k = 0; k < spec.train_per_class; ++k) {
      train.images.push_back(dataset.images[members[k]]);
      train.labels.push_back(cls);
    }
    for (int k = 0; k < spec.test_per_class; ++k) {
      test.images.push_back(
          dataset.images[members[spec.train_per_class + k]]);
      test.labels.push_back(cls);
    }
  }
  return {std::move(train), std::move(test)};
}

namespace {

// Smooth base image: a control grid of uniform values upsampled bilinearly.
ImageTensor smooth_base(SplitMix64& rng, int height, int width, int grid) {
  ImageTensor control = ImageTensor::zeros(grid, grid, 1);
  for (double& v : control.data) {
    v = std::round(30.0 + 195.0 * rng.next_unit());
  }
  return resize_bilinear(control, height, width);
}

double truncated_gaussian(SplitMix64& rng, double sigma) {
  // Box-Muller, clamped to +-3 sigma so perturbations stay bounded.
  const double u1 = 1.0 - rng.next_unit();
  const double u2 = rng.next_unit();
  const double z =
      std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return sigma * std::clamp(z, -3.0, 3.0);
}

}  // namespace

LabeledDataset synth_faces(const SynthSpec& spec) {
  if (spec.classes < 2 || spec.per_class < 2) {
    throw std::invalid_argument("synthetic set needs >= 2 classes and >= 2 "
                                "images per class");
  }
  if (spec.height < 2 || spec.width < 2 || spec.control_grid < 2) {
    throw std::invalid_argument("degenerate synthetic image size");
  }

  SplitMix64 rng(spec.seed);
  const std::size_t d = std::size_t(spec.height) * spec.width;
  const double min_distance =
      4.0 * spec.noise_sigma * std::sqrt(double(d));

  std::vector<ImageTensor> bases;
  for (int cls = 0; cls < spec.classes; ++cls) {
    ImageTensor base;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      base = smooth_base(rng, spec.height, spec.width, spec.control_grid);
      ok = true;
      for (const auto& other : bases) {
        double dist2 = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
          const double diff = base.data[t] - other.data[t];
          dist2 += diff * diff;
        }
        if (std::sqrt(dist2) < min_distance) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      throw std::runtime_error(
          "could not place " + std::to_string(spec.classes) +
          " separable class bases; lower noise_sigma or class count");
    }
    bases.push_back(std::move(base));
  }

  LabeledDataset dataset;
  for (int cls = 0; cls < spec.classes; ++cls) {
    char name[16];
    std::snprintf(name, sizeof(name), "class%02d", cls);
    dataset.class_names.push_back(name);
    for (int s = 0; s < spec.per_class; ++s) {
      ImageTensor img = bases[cls];
      for (double& v : img.data) {
        v = std::clamp(std::round(v + truncated_gaussian(rng, spec.noise_sigma)),
                       0.0, 255.0);
      }
      dataset.images.push_back(std::move(img));
      dataset.labels.push_back(cls);
    }
  }
  return dataset;
}

std::vector<std::vector<double>> flatten_images(
    const std::vector<ImageTensor>& images) {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(img.data);
  return out;
}

}  // namespace keysvm
