#pragma once

#include <filesystem>
#include <vector>

#include "keysvm/svm.hpp"

namespace keysvm {

// Binary containers, all little-endian. Layouts in docs/FORMATS.md.
// Readers refuse unknown magics and versions and fail loudly on truncation.

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

void save_stats(const NormStats& stats, const std::filesystem::path& path);
NormStats load_stats(const std::filesystem::path& path);

// Labeled image set: header {magic, version, N, H, W, C, dtype}, then N
// int32 labels, then pixel data. dtype 0 = uint8 (integer domain), 1 =
// float64 (z-scored domain). Written as uint8 when every value is an
// integer in [0, 255], float64 otherwise.
struct DatasetContainer {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
};

void save_container(const DatasetContainer& set,
                    const std::filesystem::path& path);
DatasetContainer load_container(const std::filesystem::path& path);

}  // namespace keysvm
