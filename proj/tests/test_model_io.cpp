#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "keysvm/dataset.hpp"
#include "keysvm/model_io.hpp"
#include "keysvm/rng.hpp"
#include "keysvm/transform.hpp"

using namespace keysvm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::path("tmp_test_model_io") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TrainedModel small_model(SplitMix64& rng) {
  std::vector<std::vector<double>> X;
  std::vector<int> labels;
  const double centers[3][2] = {{0.0, 0.0}, {7.0, 0.0}, {0.0, 7.0}};
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < 12; ++i) {
      X.push_back({centers[cls][0] + rng.next_unit(),
                   centers[cls][1] + rng.next_unit()});
      labels.push_back(cls + 10);  // non-contiguous labels on purpose
    }
  }
  TrainedModel model =
      train_multiclass(X, labels, 50.0, KernelSpec::rbf(0.4));
  model.fingerprint = {2, StepToggles{true, true, true, true}};
  return model;
}

}  // namespace

TEST_CASE("model save/load round trip preserves predictions and fields") {
  const fs::path dir = fresh_dir("model");
  SplitMix64 rng(17);
  const TrainedModel model = small_model(rng);
  save_model(model, dir / "m.bin");
  const TrainedModel loaded = load_model(dir / "m.bin");

  CHECK(loaded.kernel == model.kernel);
  CHECK(loaded.C == model.C);
  CHECK(loaded.class_labels == model.class_labels);
  CHECK(loaded.fingerprint == model.fingerprint);
  REQUIRE(loaded.pairs.size() == model.pairs.size());
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    CHECK(loaded.pairs[p].bias == model.pairs[p].bias);
    CHECK(loaded.pairs[p].coeff == model.pairs[p].coeff);
    CHECK(loaded.pairs[p].sv_index == model.pairs[p].sv_index);
  }

  for (int round = 0; round < 100; ++round) {
    const std::vector<double> x{rng.next_unit() * 8.0, rng.next_unit() * 8.0};
    CHECK(predict_multiclass(loaded, x) == predict_multiclass(model, x));
  }

  // saving twice produces identical bytes
  save_model(model, dir / "m2.bin");
  CHECK(file_bytes(dir / "m.bin") == file_bytes(dir / "m2.bin"));
}

TEST_CASE("model loader rejects corrupt files") {
  const fs::path dir = fresh_dir("corrupt");
  SplitMix64 rng(18);
  const TrainedModel model = small_model(rng);
  save_model(model, dir / "m.bin");
  const std::vector<std::uint8_t> good = file_bytes(dir / "m.bin");

  {  // truncated
    std::ofstream out(dir / "trunc.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(good.data()),
              std::streamsize(good.size() / 2));
  }
  CHECK_THROWS_WITH_AS(load_model(dir / "trunc.bin"),
                       doctest::Contains("truncated"), std::runtime_error);

  {  // bad magic
    std::vector<std::uint8_t> bad = good;
    bad[0] = 'X';
    std::ofstream out(dir / "magic.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bad.data()),
              std::streamsize(bad.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(dir / "magic.bin"),
                       doctest::Contains("not a model"), std::runtime_error);

  {  // unknown version
    std::vector<std::uint8_t> bad = good;
    bad[4] = 99;
    std::ofstream out(dir / "version.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bad.data()),
              std::streamsize(bad.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(dir / "version.bin"),
                       doctest::Contains("unsupported version"),
                       std::runtime_error);

  {  // trailing bytes
    std::vector<std::uint8_t> bad = good;
    bad.push_back(0);
    std::ofstream out(dir / "trailing.bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bad.data()),
              std::streamsize(bad.size()));
  }
  CHECK_THROWS_WITH_AS(load_model(dir / "trailing.bin"),
                       doctest::Contains("trailing"), std::runtime_error);
}

TEST_CASE("model files trained under a key contain no key material") {
  const fs::path dir = fresh_dir("keyscan");
  const SecretKey key = SecretKey::from_hex("00112233445566778899aabbccddeeff");

  SynthSpec spec;
  spec.classes = 3;
  spec.per_class = 5;
  spec.height = 10;
  spec.width = 10;
  spec.seed = 9;
  const LabeledDataset set = synth_faces(spec);

  TransformConfig config;
  config.block_size = 2;
  config.key = key;
  const TransformResult transformed = transform_dataset(set.images, config);
  TrainedModel model = train_multiclass(flatten_images(transformed.images),
                                        set.labels, 10.0, KernelSpec::rbf(0.01));
  model.stats = transformed.stats;
  model.fingerprint = {config.block_size, config.steps};
  save_model(model, dir / "m.bin");

  const std::vector<std::uint8_t> bytes = file_bytes(dir / "m.bin");
  const auto contains = [&](const std::vector<std::uint8_t>& needle) {
    return std::search(bytes.begin(), bytes.end(), needle.begin(),
                       needle.end()) != bytes.end();
  };

  // neither the master key nor any derived subkey seed appears in the file
  CHECK_FALSE(contains(key.master()));
  const SubKeys sub = derive_subkeys(key);
  for (std::uint64_t seed :
       {sub.block_perm, sub.pixel_shuffle, sub.bit_flip}) {
    std::vector<std::uint8_t> le(8);
    for (int i = 0; i < 8; ++i) le[i] = std::uint8_t(seed >> (8 * i));
    CHECK_FALSE(contains(le));
  }
}

TEST_CASE("stats file round trip") {
  const fs::path dir = fresh_dir("stats");
  SplitMix64 rng(4);
  std::vector<ImageTensor> images;
  for (int i = 0; i < 5; ++i) {
    ImageTensor img = ImageTensor::zeros(6, 4, 1);
    for (double& v : img.data) v = double(rng.next_below(256));
    images.push_back(img);
  }
  const NormStats stats = zscore_fit(images);
  save_stats(stats, dir / "s.bin");
  const NormStats loaded = load_stats(dir / "s.bin");
  CHECK(loaded.height == stats.height);
  CHECK(loaded.width == stats.width);
  CHECK(loaded.channels == stats.channels);
  CHECK(loaded.mean == stats.mean);
  CHECK(loaded.stddev == stats.stddev);

  CHECK_THROWS_AS(load_stats(dir / "missing.bin"), std::runtime_error);
}

TEST_CASE("readers reject dimension products that would wrap") {
  const fs::path dir = fresh_dir("dims");
  // KSST header with each dimension individually plausible but whose
  // product overflows any sane payload size
  std::vector<std::uint8_t> bytes{'K', 'S', 'S', 'T'};
  const auto push_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  };
  push_u32(1);            // version
  push_u32(0x3fffffff);   // height
  push_u32(0x3fffffff);   // width
  push_u32(0x3fffffff);   // channels
  std::ofstream out(dir / "huge.bin", std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  out.close();
  CHECK_THROWS_WITH_AS(load_stats(dir / "huge.bin"),
                       doctest::Contains("corrupt dimensions"),
                       std::runtime_error);
}

TEST_CASE("dataset container round trips both dtypes") {
  const fs::path dir = fresh_dir("container");
  SplitMix64 rng(5);

  DatasetContainer u8set;
  for (int i = 0; i < 4; ++i) {
    ImageTensor img = ImageTensor::zeros(3, 5, 1);
    for (double& v : img.data) v = double(rng.next_below(256));
    u8set.images.push_back(img);
    u8set.labels.push_back(i % 2);
  }
  save_container(u8set, dir / "u8.bin");
  const DatasetContainer u8back = load_container(dir / "u8.bin");
  CHECK(u8back.labels == u8set.labels);
  for (std::size_t i = 0; i < u8set.images.size(); ++i) {
    CHECK(u8back.images[i].data == u8set.images[i].data);
  }
  // integer-valued data gets the compact dtype: header is 28 bytes,
  // labels 16, pixels 4*15
  CHECK(file_bytes(dir / "u8.bin").size() == 28 + 16 + 60);

  DatasetContainer f64set = u8set;
  f64set.images[0].data[3] = 0.5;  // no longer integer-valued
  save_container(f64set, dir / "f64.bin");
  const DatasetContainer f64back = load_container(dir / "f64.bin");
  for (std::size_t i = 0; i < f64set.images.size(); ++i) {
    CHECK(f64back.images[i].data == f64set.images[i].data);
  }
  CHECK(file_bytes(dir / "f64.bin").size() == 28 + 16 + 8 * 60);
}
