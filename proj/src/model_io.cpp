#include "keysvm/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace keysvm {

namespace {

// Explicit little-endian encoding so the files mean the same bytes
// everywhere. Layouts are documented in docs/FORMATS.md.

constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint32_t kStatsVersion = 1;
constexpr std::uint32_t kContainerVersion = 1;
constexpr std::uint32_t kSaneCount = 1u << 30;  // reject absurd corrupt counts

class Writer {
 public:
  Writer(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error(path.string() + ": cannot open");
    path_ = path;
  }

  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = std::uint8_t(v >> (8 * i));
    raw(b, 4);
  }
  void i32(std::int32_t v) { u32(std::uint32_t(v)); }
  void f64(double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(bits >> (8 * i));
    raw(b, 8);
  }
  void magic(const char tag[4]) { raw(tag, 4); }
  void f64_span(const std::vector<double>& values) {
    for (double v : values) f64(v);
  }
  void close() {
    out_.flush();
    if (!out_) throw std::runtime_error(path_.string() + ": write failed");
  }

 private:
  void raw(const void* data, std::size_t size) {
    out_.write(static_cast<const char*>(data), std::streamsize(size));
  }
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error(path.string() + ": cannot open");
  }

  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    raw(b, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::int32_t i32() { return std::int32_t(u32()); }
  double f64() {
    std::uint8_t b[8];
    raw(b, 8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
    return std::bit_cast<double>(bits);
  }
  void expect_magic(const char tag[4], const char* what) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0) {
      throw std::runtime_error(path_.string() + ": not a " +
                               std::string(what) + " file");
    }
  }
  std::uint32_t count(const char* what) {
    const std::uint32_t v = u32();
    if (v > kSaneCount) {
      throw std::runtime_error(path_.string() + ": corrupt " +
                               std::string(what) + " count");
    }
    return v;
  }
  std::vector<double> f64_vec(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    return out;
  }
  void expect_eof() {
    char c;
    in_.read(&c, 1);
    if (!in_.eof()) {
      throw std::runtime_error(path_.string() + ": trailing bytes");
    }
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  void raw(void* data, std::size_t size) {
    in_.read(static_cast<char*>(data), std::streamsize(size));
    if (std::size_t(in_.gcount()) != size) {
      throw std::runtime_error(path_.string() + ": truncated file");
    }
  }
  std::ifstream in_;
  std::filesystem::path path_;
};

void check_version(std::uint32_t got, std::uint32_t want,
                   const std::filesystem::path& path) {
  if (got != want) {
    throw std::runtime_error(path.string() + ": unsupported version " +
                             std::to_string(got) + " (expected " +
                             std::to_string(want) + ")");
  }
}

// Per-field counts are already capped, but their product must also stay
// addressable or a corrupt header could wrap the expected payload size.
std::size_t checked_volume(std::size_t a, std::size_t b, std::size_t c,
                           const std::filesystem::path& path) {
  constexpr std::size_t kMaxVolume = std::size_t(1) << 40;
  if (a != 0 && b != 0 && (kMaxVolume / a < b || kMaxVolume / (a * b) < c)) {
    throw std::runtime_error(path.string() + ": corrupt dimensions");
  }
  return a * b * c;
}

void write_stats_body(Writer& w, const NormStats& stats) {
  w.u32(std::uint32_t(stats.height));
  w.u32(std::uint32_t(stats.width));
  w.u32(std::uint32_t(stats.channels));
  w.f64_span(stats.mean);
  w.f64_span(stats.stddev);
}

NormStats read_stats_body(Reader& r) {
  NormStats stats;
  stats.height = int(r.count("stats height"));
  stats.width = int(r.count("stats width"));
  stats.channels = int(r.count("stats channels"));
  const std::size_t d =
      checked_volume(std::size_t(stats.height), std::size_t(stats.width),
                     std::size_t(stats.channels), r.path());
  stats.mean = r.f64_vec(d);
  stats.stddev = r.f64_vec(d);
  return stats;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  Writer w(path);
  w.magic("KSVM");
  w.u32(kModelVersion);
  w.u32(std::uint32_t(model.kernel.kind));
  w.f64(model.kernel.gamma);
  w.u32(std::uint32_t(model.kernel.degree));
  w.f64(model.kernel.coef0);
  w.f64(model.C);
  w.u32(std::uint32_t(model.class_labels.size()));
  for (int label : model.class_labels) w.i32(label);
  w.u32(std::uint32_t(model.feature_dim()));
  w.u32(std::uint32_t(model.stats.height));
  w.u32(std::uint32_t(model.stats.width));
  w.u32(std::uint32_t(model.stats.channels));
  w.u32(std::uint32_t(model.fingerprint.block_size));
  w.u8(model.fingerprint.steps.block_permutation);
  w.u8(model.fingerprint.steps.pixel_shuffle);
  w.u8(model.fingerprint.steps.bit_flip);
  w.u8(model.fingerprint.steps.zscore);
  w.u8(model.stats.empty() ? 0 : 1);
  if (!model.stats.empty()) {
    w.f64_span(model.stats.mean);
    w.f64_span(model.stats.stddev);
  }
  w.u32(std::uint32_t(model.vectors.size()));
  for (const auto& vec : model.vectors) w.f64_span(vec);
  w.u32(std::uint32_t(model.pairs.size()));
  for (const PairModel& pair : model.pairs) {
    w.i32(pair.label_a);
    w.i32(pair.label_b);
    w.f64(pair.bias);
    w.u32(std::uint32_t(pair.sv_index.size()));
    for (std::size_t k = 0; k < pair.sv_index.size(); ++k) {
      w.u32(pair.sv_index[k]);
      w.f64(pair.coeff[k]);
    }
  }
  w.close();
}

TrainedModel load_model(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("KSVM", "model");
  check_version(r.u32(), kModelVersion, path);

  TrainedModel model;
  const std::uint32_t kind = r.u32();
  if (kind > 2) throw std::runtime_error(path.string() + ": bad kernel kind");
  model.kernel.kind = KernelKind(kind);
  model.kernel.gamma = r.f64();
  model.kernel.degree = int(r.u32());
  model.kernel.coef0 = r.f64();
  model.C = r.f64();
  const std::uint32_t n_classes = r.count("class");
  model.class_labels.resize(n_classes);
  for (auto& label : model.class_labels) label = r.i32();
  const std::uint32_t dim = r.count("feature");
  model.stats.height = int(r.count("height"));
  model.stats.width = int(r.count("width"));
  model.stats.channels = int(r.count("channels"));
  model.fingerprint.block_size = int(r.count("block size"));
  model.fingerprint.steps.block_permutation = r.u8() != 0;
  model.fingerprint.steps.pixel_shuffle = r.u8() != 0;
  model.fingerprint.steps.bit_flip = r.u8() != 0;
  model.fingerprint.steps.zscore = r.u8() != 0;
  const bool has_stats = r.u8() != 0;
  if (has_stats) {
    const std::size_t d = checked_volume(
        std::size_t(model.stats.height), std::size_t(model.stats.width),
        std::size_t(model.stats.channels), r.path());
    model.stats.mean = r.f64_vec(d);
    model.stats.stddev = r.f64_vec(d);
  } else {
    model.stats.height = model.stats.width = model.stats.channels = 0;
  }
  const std::uint32_t n_vectors = r.count("vector");
  model.vectors.reserve(n_vectors);
  for (std::uint32_t t = 0; t < n_vectors; ++t) {
    model.vectors.push_back(r.f64_vec(dim));
  }
  const std::uint32_t n_pairs = r.count("pair");
  model.pairs.reserve(n_pairs);
  for (std::uint32_t p = 0; p < n_pairs; ++p) {
    PairModel pair;
    pair.label_a = r.i32();
    pair.label_b = r.i32();
    pair.bias = r.f64();
    const std::uint32_t n_sv = r.count("support vector");
    pair.sv_index.reserve(n_sv);
    pair.coeff.reserve(n_sv);
    for (std::uint32_t k = 0; k < n_sv; ++k) {
      const std::uint32_t idx = r.u32();
      if (idx >= n_vectors) {
        throw std::runtime_error(path.string() +
                                 ": support vector index out of range");
      }
      pair.sv_index.push_back(idx);
      pair.coeff.push_back(r.f64());
    }
    model.pairs.push_back(std::move(pair));
  }
  r.expect_eof();
  return model;
}

void save_stats(const NormStats& stats, const std::filesystem::path& path) {
  Writer w(path);
  w.magic("KSST");
  w.u32(kStatsVersion);
  write_stats_body(w, stats);
  w.close();
}

NormStats load_stats(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("KSST", "stats");
  check_version(r.u32(), kStatsVersion, path);
  NormStats stats = read_stats_body(r);
  r.expect_eof();
  return stats;
}

void save_container(const DatasetContainer& set,
                    const std::filesystem::path& path) {
  if (set.images.empty() || set.images.size() != set.labels.size()) {
    throw std::invalid_argument("container: empty or mismatched dataset");
  }
  const ImageTensor& first = set.images.front();
  bool integral = true;
  for (const auto& img : set.images) {
    if (!img.same_shape(first)) {
      throw std::invalid_argument("container: image dimensions differ");
    }
    for (double v : img.data) {
      if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v) {
        integral = false;
        break;
      }
    }
    if (!integral) break;
  }

  Writer w(path);
  w.magic("KSVD");
  w.u32(kContainerVersion);
  w.u32(std::uint32_t(set.images.size()));
  w.u32(std::uint32_t(first.height));
  w.u32(std::uint32_t(first.width));
  w.u32(std::uint32_t(first.channels));
  w.u32(integral ? 0 : 1);
  for (int label : set.labels) w.i32(label);
  for (const auto& img : set.images) {
    if (integral) {
      for (double v : img.data) w.u8(std::uint8_t(v));
    } else {
      w.f64_span(img.data);
    }
  }
  w.close();
}

DatasetContainer load_container(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("KSVD", "dataset container");
  check_version(r.u32(), kContainerVersion, path);
  const std::uint32_t n = r.count("image");
  const int height = int(r.count("height"));
  const int width = int(r.count("width"));
  const int channels = int(r.count("channels"));
  const std::uint32_t dtype = r.u32();
  if (dtype > 1) throw std::runtime_error(path.string() + ": bad dtype");

  DatasetContainer set;
  set.labels.resize(n);
  for (auto& label : set.labels) label = r.i32();
  set.images.reserve(n);
  const std::size_t d = checked_volume(std::size_t(height),
                                       std::size_t(width),
                                       std::size_t(channels), r.path());
  for (std::uint32_t i = 0; i < n; ++i) {
    ImageTensor img = ImageTensor::zeros(height, width, channels);
    if (dtype == 0) {
      for (std::size_t t = 0; t < d; ++t) img.data[t] = double(r.u8());
    } else {
      img.data = r.f64_vec(d);
    }
    set.images.push_back(std::move(img));
  }
  r.expect_eof();
  return set;
}

}  // namespace keysvm
