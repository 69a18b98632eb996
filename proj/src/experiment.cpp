#include "keysvm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "keysvm/rng.hpp"
#include "keysvm/sha256.hpp"

namespace keysvm {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(s);
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const char* source_name(DatasetSource s) {
  return s == DatasetSource::synthetic ? "synthetic" : "directory";
}

const char* no_key_name(NoKeyNormalization n) {
  return n == NoKeyNormalization::baseline_stats ? "baseline-stats" : "raw";
}

const char* baseline_name(BaselineNormalization n) {
  return n == BaselineNormalization::zscore ? "zscore" : "raw";
}

std::string steps_value(const StepToggles& steps) {
  std::vector<std::string> names;
  if (steps.block_permutation) names.push_back("block_permutation");
  if (steps.pixel_shuffle) names.push_back("pixel_shuffle");
  if (steps.bit_flip) names.push_back("bit_flip");
  if (steps.zscore) names.push_back("zscore");
  if (names.empty()) return "none";
  std::string out = names[0];
  for (std::size_t i = 1; i < names.size(); ++i) out += "," + names[i];
  return out;
}

StepToggles parse_steps(const std::string& value) {
  StepToggles steps{false, false, false, false};
  if (trim(value) == "none") return steps;
  for (const std::string& name : split_list(value)) {
    if (name == "block_permutation") {
      steps.block_permutation = true;
    } else if (name == "pixel_shuffle") {
      steps.pixel_shuffle = true;
    } else if (name == "bit_flip") {
      steps.bit_flip = true;
    } else if (name == "zscore") {
      steps.zscore = true;
    } else {
      throw std::invalid_argument("unknown transform step: " + name);
    }
  }
  return steps;
}

const char* kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::rbf:
      return "rbf";
    case KernelKind::polynomial:
      return "poly";
  }
  return "rbf";
}

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + key + ": " + value);
  }
}

long parse_long(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer for " + key + ": " + value);
  }
}

}  // namespace

std::string write_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "# keysvm experiment config\n";
  out << "source = " << source_name(c.source) << "\n";
  out << "dataset_dir = " << c.dataset_dir << "\n";
  out << "synthetic.classes = " << c.synth.classes << "\n";
  out << "synthetic.per_class = " << c.synth.per_class << "\n";
  out << "synthetic.height = " << c.synth.height << "\n";
  out << "synthetic.width = " << c.synth.width << "\n";
  out << "synthetic.seed = " << c.synth.seed << "\n";
  out << "synthetic.noise_sigma = " << format_double(c.synth.noise_sigma)
      << "\n";
  out << "synthetic.control_grid = " << c.synth.control_grid << "\n";
  out << "split.train = " << c.split.train_per_class << "\n";
  out << "split.test = " << c.split.test_per_class << "\n";
  out << "resize.height = " << c.resize_height << "\n";
  out << "resize.width = " << c.resize_width << "\n";
  out << "key = " << c.key_hex << "\n";
  out << "block_sizes = ";
  for (std::size_t i = 0; i < c.block_sizes.size(); ++i) {
    out << (i ? "," : "") << c.block_sizes[i];
  }
  out << "\n";
  out << "steps = " << steps_value(c.steps) << "\n";
  out << "kernel = " << kernel_name(c.kernel.kind) << "\n";
  out << "gamma = " << format_double(c.kernel.gamma) << "\n";
  out << "degree = " << c.kernel.degree << "\n";
  out << "coef0 = " << format_double(c.kernel.coef0) << "\n";
  out << "C = " << format_double(c.C) << "\n";
  out << "tol = " << format_double(c.tol) << "\n";
  out << "no_key_normalization = " << no_key_name(c.no_key_normalization)
      << "\n";
  out << "baseline_normalization = "
      << baseline_name(c.baseline_normalization) << "\n";
  out << "report.text = " << c.report_text_path << "\n";
  out << "report.csv = " << c.report_csv_path << "\n";
  return out.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig c;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));

    if (key == "source") {
      if (value == "synthetic") {
        c.source = DatasetSource::synthetic;
      } else if (value == "directory") {
        c.source = DatasetSource::directory;
      } else {
        throw std::invalid_argument("bad source: " + value);
      }
    } else if (key == "dataset_dir") {
      c.dataset_dir = value;
    } else if (key == "synthetic.classes") {
      c.synth.classes = int(parse_long(value, key));
    } else if (key == "synthetic.per_class") {
      c.synth.per_class = int(parse_long(value, key));
    } else if (key == "synthetic.height") {
      c.synth.height = int(parse_long(value, key));
    } else if (key == "synthetic.width") {
      c.synth.width = int(parse_long(value, key));
    } else if (key == "synthetic.seed") {
      c.synth.seed = std::uint64_t(std::stoull(value));
    } else if (key == "synthetic.noise_sigma") {
      c.synth.noise_sigma = parse_double(value, key);
    } else if (key == "synthetic.control_grid") {
      c.synth.control_grid = int(parse_long(value, key));
    } else if (key == "split.train") {
      c.split.train_per_class = int(parse_long(value, key));
    } else if (key == "split.test") {
      c.split.test_per_class = int(parse_long(value, key));
    } else if (key == "resize.height") {
      c.resize_height = int(parse_long(value, key));
    } else if (key == "resize.width") {
      c.resize_width = int(parse_long(value, key));
    } else if (key == "key") {
      c.key_hex = value;
    } else if (key == "block_sizes") {
      c.block_sizes.clear();
      for (const std::string& item : split_list(value)) {
        c.block_sizes.push_back(int(parse_long(item, key)));
      }
    } else if (key == "steps") {
      c.steps = parse_steps(value);
    } else if (key == "kernel") {
      if (value == "rbf") {
        c.kernel.kind = KernelKind::rbf;
      } else if (value == "poly") {
        c.kernel.kind = KernelKind::polynomial;
      } else if (value == "linear") {
        c.kernel.kind = KernelKind::linear;
      } else {
        throw std::invalid_argument("bad kernel: " + value);
      }
    } else if (key == "gamma") {
      c.kernel.gamma = parse_double(value, key);
    } else if (key == "degree") {
      c.kernel.degree = int(parse_long(value, key));
    } else if (key == "coef0") {
      c.kernel.coef0 = parse_double(value, key);
    } else if (key == "C") {
      c.C = parse_double(value, key);
    } else if (key == "tol") {
      c.tol = parse_double(value, key);
    } else if (key == "no_key_normalization") {
      if (value == "baseline-stats") {
        c.no_key_normalization = NoKeyNormalization::baseline_stats;
      } else if (value == "raw") {
        c.no_key_normalization = NoKeyNormalization::raw;
      } else {
        throw std::invalid_argument("bad no_key_normalization: " + value);
      }
    } else if (key == "baseline_normalization") {
      if (value == "zscore") {
        c.baseline_normalization = BaselineNormalization::zscore;
      } else if (value == "raw") {
        c.baseline_normalization = BaselineNormalization::raw;
      } else {
        throw std::invalid_argument("bad baseline_normalization: " + value);
      }
    } else if (key == "report.text") {
      c.report_text_path = value;
    } else if (key == "report.csv") {
      c.report_csv_path = value;
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  return c;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace {

double count_accuracy(const std::vector<int>& predictions,
                      const std::vector<int>& truth) {
  if (predictions.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("accuracy: size mismatch");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i] == truth[i]) ++correct;
  }
  return double(correct) / double(truth.size());
}

}  // namespace

Report run_protocol(const ExperimentConfig& config) {
  const SecretKey key = SecretKey::from_hex(config.key_hex);
  if (config.block_sizes.empty()) {
    throw std::invalid_argument("protocol: no block sizes configured");
  }
  config.kernel.validate();
  // Fail on unusable output locations before the expensive part starts.
  for (const std::string& path : {config.report_text_path,
                                  config.report_csv_path}) {
    if (path.empty()) continue;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
      throw std::invalid_argument("protocol: report directory does not exist: " +
                                  parent.string());
    }
  }

  LabeledDataset dataset;
  if (config.source == DatasetSource::synthetic) {
    dataset = synth_faces(config.synth);
    if (config.resize_height > 0 && config.resize_width > 0) {
      for (auto& img : dataset.images) {
        img = resize_bilinear(img, config.resize_height, config.resize_width);
      }
    }
  } else {
    LoadOptions load;
    load.resize_height = config.resize_height;
    load.resize_width = config.resize_width;
    dataset = load_directory(config.dataset_dir, load);
  }

  auto [train, test] = split(dataset, config.split);
  if (train.images.size() < 2 || test.images.empty()) {
    throw std::invalid_argument("protocol: split leaves too few images");
  }

  const TrainOptions solver{config.tol};

  Report report;
  report.truth = test.labels;
  {
    const std::string canonical = write_config_text(config);
    const Sha256Digest digest = sha256(std::span(
        reinterpret_cast<const std::uint8_t*>(canonical.data()),
        canonical.size()));
    report.config_fingerprint = to_hex(digest).substr(0, 16);
  }

  // Stats of the untransformed training set; the without-key path z-scores
  // raw test data against these.
  const NormStats baseline_stats = zscore_fit(train.images);

  const bool baseline_zscored =
      config.baseline_normalization == BaselineNormalization::zscore;
  std::vector<std::vector<double>> train_base, test_base;
  if (baseline_zscored) {
    std::vector<ImageTensor> tmp;
    tmp.reserve(train.images.size());
    for (const auto& img : train.images) {
      tmp.push_back(zscore_apply(img, baseline_stats));
    }
    train_base = flatten_images(tmp);
    tmp.clear();
    for (const auto& img : test.images) {
      tmp.push_back(zscore_apply(img, baseline_stats));
    }
    test_base = flatten_images(tmp);
  } else {
    train_base = flatten_images(train.images);
    test_base = flatten_images(test.images);
  }

  MulticlassTrainStats base_diag;
  const TrainedModel baseline_model = train_multiclass(
      train_base, train.labels, config.C, config.kernel, solver, &base_diag);
  report.baseline_predictions = predict_dataset(baseline_model, test_base);
  report.baseline = count_accuracy(report.baseline_predictions, report.truth);

  // Without-key features do not depend on the block size; build them once.
  std::vector<std::vector<double>> test_no_key;
  if (config.no_key_normalization == NoKeyNormalization::baseline_stats) {
    std::vector<ImageTensor> tmp;
    tmp.reserve(test.images.size());
    for (const auto& img : test.images) {
      tmp.push_back(zscore_apply(img, baseline_stats));
    }
    test_no_key = flatten_images(tmp);
  } else {
    test_no_key = flatten_images(test.images);
  }

  std::ostringstream iterations_note;
  iterations_note << "solver_iterations: baseline=" << base_diag.total_iterations;

  for (int block_size : config.block_sizes) {
    TransformConfig tc;
    tc.block_size = block_size;
    tc.steps = config.steps;
    tc.key = key;

    const TransformResult train_tr = transform_dataset(train.images, tc);
    MulticlassTrainStats diag;
    TrainedModel protected_model =
        train_multiclass(flatten_images(train_tr.images), train.labels,
                         config.C, config.kernel, solver, &diag);
    protected_model.stats = train_tr.stats;
    protected_model.fingerprint = {block_size, config.steps};

    const TransformResult test_tr =
        transform_dataset(test.images, tc, &train_tr.stats);
    const std::vector<int> with_key_pred =
        predict_dataset(protected_model, flatten_images(test_tr.images));
    const std::vector<int> without_key_pred =
        predict_dataset(protected_model, test_no_key);

    ReportRow row;
    row.transform_label = "proposed(M=" + std::to_string(block_size) + ")";
    row.with_key = count_accuracy(with_key_pred, report.truth);
    row.without_key = count_accuracy(without_key_pred, report.truth);
    row.matches_baseline = with_key_pred == report.baseline_predictions;
    report.rows.push_back(row);
    report.with_key_predictions.push_back(with_key_pred);
    report.without_key_predictions.push_back(without_key_pred);

    iterations_note << " M" << block_size << "=" << diag.total_iterations;
  }

  report.metadata.push_back(
      "dataset: " + std::string(source_name(config.source)) + " classes=" +
      std::to_string(dataset.class_count()) + " train=" +
      std::to_string(train.images.size()) + " test=" +
      std::to_string(test.images.size()));
  const ImageTensor& probe = dataset.images.front();
  report.metadata.push_back(
      "image: " + std::to_string(probe.height) + "x" +
      std::to_string(probe.width) + "x" + std::to_string(probe.channels));
  report.metadata.push_back("kernel: " + config.kernel.describe() +
                            " C=" + format_double(config.C) +
                            " tol=" + format_double(config.tol));
  report.metadata.push_back("steps: " + steps_value(config.steps));
  report.metadata.push_back("no_key_normalization: " +
                            std::string(no_key_name(config.no_key_normalization)));
  report.metadata.push_back("baseline_normalization: " +
                            std::string(baseline_name(config.baseline_normalization)));
  report.metadata.push_back(iterations_note.str());
  return report;
}

std::string render_report_text(const Report& report) {
  std::ostringstream out;
  out << "# keysvm experiment report\n";
  out << "# config: " << report.config_fingerprint << "\n";
  for (const std::string& line : report.metadata) {
    out << "# " << line << "\n";
  }
  for (const ReportRow& row : report.rows) {
    out << "# " << row.transform_label << " predictions match baseline: "
        << (row.matches_baseline ? "yes" : "no") << "\n";
  }
  out << "\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-18s %10s %12s\n", "transform",
                "with_key", "without_key");
  out << line;
  for (const ReportRow& row : report.rows) {
    std::snprintf(line, sizeof(line), "%-18s %10s %12s\n",
                  row.transform_label.c_str(),
                  format_accuracy(row.with_key).c_str(),
                  format_accuracy(row.without_key).c_str());
    out << line;
  }
  if (!report.rows.empty() || !report.baseline_predictions.empty()) {
    std::snprintf(line, sizeof(line), "%-18s %10s %12s\n", "baseline",
                  format_accuracy(report.baseline).c_str(),
                  format_accuracy(report.baseline).c_str());
    out << line;
  }
  return out.str();
}

std::string render_report_csv(const Report& report) {
  std::ostringstream out;
  out << "transform,with_key,without_key\n";
  for (const ReportRow& row : report.rows) {
    out << row.transform_label << "," << format_accuracy(row.with_key) << ","
        << format_accuracy(row.without_key) << "\n";
  }
  if (!report.rows.empty() || !report.baseline_predictions.empty()) {
    out << "baseline," << format_accuracy(report.baseline) << ","
        << format_accuracy(report.baseline) << "\n";
  }
  return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& path,
                 ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open");
  out << (format == ReportFormat::text ? render_report_text(report)
                                       : render_report_csv(report));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

// ---------------------------------------------------------------------------
// Invariant suite

namespace {

std::vector<double> flatten(const ImageTensor& img) { return img.data; }

double direct_squared_distance(const std::vector<double>& a,
                               const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double diff = a[t] - b[t];
    sum += diff * diff;
  }
  return sum;
}

double direct_inner_product(const std::vector<double>& a,
                            const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) sum += a[t] * b[t];
  return sum;
}

ImageTensor random_image(SplitMix64& rng, int h, int w) {
  ImageTensor img = ImageTensor::zeros(h, w, 1);
  for (double& v : img.data) v = double(rng.next_below(256));
  return img;
}

ImageTensor apply_keyed_steps(const ImageTensor& img, int block_size,
                              const StepToggles& steps,
                              const Permutation& block_perm,
                              const Permutation& pixel_perm,
                              const std::vector<std::uint8_t>& mask) {
  BlockGrid grid = segment(img, block_size);
  if (steps.block_permutation) grid = permute_blocks(grid, block_perm);
  for (auto& block : grid.blocks) {
    if (steps.pixel_shuffle) block = shuffle_pixels(block, pixel_perm);
    if (steps.bit_flip) block = flip_bits(block, mask);
  }
  return assemble(grid);
}

double relative_deviation(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

}  // namespace

std::vector<InvariantResult> verify_invariants(const VerifyOptions& options) {
  std::vector<InvariantResult> results;
  SplitMix64 rng(options.seed);

  // --- permutation steps conserve distances and inner products -------------
  {
    double dist_dev = 0.0, inner_dev = 0.0;
    for (int block_size : {2, 5}) {
      const int side = 20;
      const std::size_t blocks =
          std::size_t(side / block_size) * (side / block_size);
      const std::size_t p = std::size_t(block_size) * block_size;
      for (int round = 0; round < 16; ++round) {
        const Permutation bp = gen_permutation(rng.next(), blocks);
        const Permutation pp = gen_permutation(rng.next(), p);
        const StepToggles steps{true, true, false, false};
        const ImageTensor a = random_image(rng, side, side);
        const ImageTensor b = random_image(rng, side, side);
        const ImageTensor ta = apply_keyed_steps(a, block_size, steps, bp, pp, {});
        const ImageTensor tb = apply_keyed_steps(b, block_size, steps, bp, pp, {});
        dist_dev = std::max(
            dist_dev,
            std::fabs(direct_squared_distance(flatten(ta), flatten(tb)) -
                      direct_squared_distance(flatten(a), flatten(b))));
        inner_dev = std::max(
            inner_dev,
            std::fabs(direct_inner_product(flatten(ta), flatten(tb)) -
                      direct_inner_product(flatten(a), flatten(b))));
      }
    }
    results.push_back({"distance conservation (block permutation + pixel shuffle)",
                       dist_dev == 0.0, dist_dev, "integer domain, exact"});
    results.push_back({"inner-product conservation (block permutation + pixel shuffle)",
                       inner_dev == 0.0, inner_dev, "integer domain, exact"});
  }

  // --- bit flip conserves distances (shared mask) ---------------------------
  {
    const int side = 20, block_size = 5;
    const std::size_t p = std::size_t(block_size) * block_size;
    double dev = 0.0;
    for (int round = 0; round < 16; ++round) {
      const std::vector<std::uint8_t> mask = gen_flip_mask(rng.next(), p);
      std::vector<std::uint8_t> mask_b = mask;
      if (options.inject_mask_mismatch) {
        mask_b = gen_flip_mask(rng.next(), p);  // deliberately different
      }
      const StepToggles steps{false, false, true, false};
      const ImageTensor a = random_image(rng, side, side);
      const ImageTensor b = random_image(rng, side, side);
      const ImageTensor ta = apply_keyed_steps(a, block_size, steps, {}, {}, mask);
      const ImageTensor tb = apply_keyed_steps(b, block_size, steps, {}, {}, mask_b);
      dev = std::max(dev,
                     std::fabs(direct_squared_distance(flatten(ta), flatten(tb)) -
                               direct_squared_distance(flatten(a), flatten(b))));
    }
    results.push_back({"distance conservation (bit flip, shared mask)",
                       dev == 0.0, dev,
                       options.inject_mask_mismatch
                           ? "fault injection: masks differ between images"
                           : "integer domain, exact"});
  }

  // --- bit flip changes raw inner products ---------------------------------
  {
    const int side = 20, block_size = 5;
    const std::size_t p = std::size_t(block_size) * block_size;
    int changed = 0;
    const int pairs = 20;
    double min_change = -1.0;
    for (int round = 0; round < pairs; ++round) {
      const std::vector<std::uint8_t> mask = gen_flip_mask(rng.next(), p);
      const StepToggles steps{false, false, true, false};
      const ImageTensor a = random_image(rng, side, side);
      const ImageTensor b = random_image(rng, side, side);
      const ImageTensor ta = apply_keyed_steps(a, block_size, steps, {}, {}, mask);
      const ImageTensor tb = apply_keyed_steps(b, block_size, steps, {}, {}, mask);
      const double change =
          std::fabs(direct_inner_product(flatten(ta), flatten(tb)) -
                    direct_inner_product(flatten(a), flatten(b)));
      if (change > 0.0) ++changed;
      if (min_change < 0.0 || change < min_change) min_change = change;
    }
    results.push_back({"inner-product change (bit flip, raw domain)",
                       changed >= pairs * 95 / 100, min_change,
                       std::to_string(changed) + "/" + std::to_string(pairs) +
                           " pairs changed"});
  }

  // --- flipped z-score: sign relation and std preservation -----------------
  {
    SynthSpec spec;
    spec.classes = 5;
    spec.per_class = 10;
    spec.height = 20;
    spec.width = 20;
    spec.seed = rng.next();
    const LabeledDataset set = synth_faces(spec);

    const int block_size = 5;
    const std::size_t p = std::size_t(block_size) * block_size;
    const std::vector<std::uint8_t> mask = gen_flip_mask(rng.next(), p);
    const std::vector<std::uint8_t> flipped_at = flip_position_mask(
        spec.height, spec.width, 1, block_size, mask);

    const NormStats stats = zscore_fit(set.images);
    std::vector<ImageTensor> flipped;
    flipped.reserve(set.images.size());
    const StepToggles steps{false, false, true, false};
    for (const auto& img : set.images) {
      flipped.push_back(apply_keyed_steps(img, block_size, steps, {}, {}, mask));
    }
    const NormStats stats_flipped = zscore_fit(flipped);

    double sign_dev = 0.0;
    for (std::size_t i = 0; i < set.images.size(); ++i) {
      const ImageTensor z = zscore_apply(set.images[i], stats);
      const ImageTensor z_flipped = zscore_apply(flipped[i], stats_flipped);
      for (std::size_t t = 0; t < z.data.size(); ++t) {
        const double want = flipped_at[t] ? -z.data[t] : z.data[t];
        sign_dev = std::max(sign_dev, std::fabs(z_flipped.data[t] - want));
      }
    }
    double std_dev = 0.0;
    for (std::size_t t = 0; t < stats.stddev.size(); ++t) {
      std_dev = std::max(std_dev,
                         std::fabs(stats_flipped.stddev[t] - stats.stddev[t]));
    }
    results.push_back({"sign relation (flipped z-score vs baseline z-score)",
                       sign_dev < 1e-9, sign_dev, ""});
    results.push_back({"std preservation under bit flip", std_dev < 1e-9,
                       std_dev, ""});
  }

  // --- full pipeline Gram equivalence ---------------------------------------
  {
    SynthSpec spec;
    spec.classes = 5;
    spec.per_class = 8;
    spec.height = 20;
    spec.width = 20;
    spec.seed = rng.next();
    const LabeledDataset set = synth_faces(spec);

    TransformConfig tc;
    tc.block_size = 5;
    tc.key = SecretKey::from_bytes(std::vector<std::uint8_t>(16, 0x5a));
    const TransformResult transformed = transform_dataset(set.images, tc);

    const NormStats stats = zscore_fit(set.images);
    std::vector<ImageTensor> baseline;
    baseline.reserve(set.images.size());
    for (const auto& img : set.images) {
      baseline.push_back(zscore_apply(img, stats));
    }

    const auto x_transformed = flatten_images(transformed.images);
    const auto x_baseline = flatten_images(baseline);
    for (const KernelSpec& spec_k :
         {KernelSpec::rbf(1e-2), KernelSpec::polynomial(0.001, 2, 1.0)}) {
      const GramMatrix gt = gram(x_transformed, spec_k);
      const GramMatrix gb = gram(x_baseline, spec_k);
      double dev = 0.0;
      for (std::size_t i = 0; i < gt.values.size(); ++i) {
        dev = std::max(dev, relative_deviation(gt.values[i], gb.values[i]));
      }
      results.push_back({"gram equivalence (" +
                             std::string(kernel_name(spec_k.kind)) + ")",
                         dev < 1e-9, dev, "full pipeline vs baseline z-score"});
    }
  }

  return results;
}

}  // namespace keysvm
