#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "keysvm/dataset.hpp"
#include "keysvm/kernels.hpp"
#include "keysvm/svm.hpp"
#include "keysvm/transform.hpp"

namespace keysvm {

enum class DatasetSource { synthetic, directory };

// How test data is normalized on the without-key evaluation path:
//   baseline_stats: z-score raw test images with stats fitted on the
//                   untransformed training set (default)
//   raw:            feed raw [0, 255] pixel values
enum class NoKeyNormalization { baseline_stats, raw };

// Whether the baseline model trains on z-scored or raw images.
enum class BaselineNormalization { zscore, raw };

struct ExperimentConfig {
  DatasetSource source = DatasetSource::synthetic;
  std::string dataset_dir;
  SynthSpec synth;
  SplitSpec split{30, 10};
  int resize_height = 0;  // 0 = keep source dimensions
  int resize_width = 0;
  std::string key_hex;
  std::vector<int> block_sizes{2, 5};
  StepToggles steps;
  KernelSpec kernel = KernelSpec::rbf(1e-4);
  double C = 512.0;
  double tol = 1e-3;
  NoKeyNormalization no_key_normalization = NoKeyNormalization::baseline_stats;
  BaselineNormalization baseline_normalization = BaselineNormalization::zscore;
  std::string report_text_path;
  std::string report_csv_path;

  bool operator==(const ExperimentConfig&) const = default;
};

// Plain-text key-value config, `key = value` per line, '#' comments.
// write_config_text emits a canonical form that parses back to an equal
// config (doubles are written with 17 significant digits).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& path);
std::string write_config_text(const ExperimentConfig& config);

struct ReportRow {
  std::string transform_label;  // e.g. "proposed(M=2)"
  double with_key = 0.0;
  double without_key = 0.0;
  bool matches_baseline = false;  // with-key predictions == baseline's
};

struct Report {
  std::vector<ReportRow> rows;
  double baseline = 0.0;
  std::string config_fingerprint;  // sha256 prefix of the canonical config
  std::vector<std::string> metadata;  // deterministic "key: value" lines

  // Raw prediction vectors, kept for verification; not serialized.
  std::vector<int> truth;
  std::vector<int> baseline_predictions;
  std::vector<std::vector<int>> with_key_predictions;
  std::vector<std::vector<int>> without_key_predictions;
};

// Full protocol: train/evaluate a baseline on (optionally z-scored)
// untransformed data, then per block size train on the keyed transform and
// evaluate with and without the key. Accuracies are recounted from the
// stored prediction vectors when the report is rendered.
Report run_protocol(const ExperimentConfig& config);

enum class ReportFormat { text, csv };

std::string render_report_text(const Report& report);
std::string render_report_csv(const Report& report);
void emit_report(const Report& report, const std::filesystem::path& path,
                 ReportFormat format);

struct InvariantResult {
  std::string name;
  bool pass = false;
  double max_deviation = 0.0;
  std::string note;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  // Fault injection: flips the two images of the distance-conservation
  // check with different masks, which must make that check fail.
  bool inject_mask_mismatch = false;
};

// Executes the transformation invariant suites (distance / inner-product
// conservation, flipped z-score sign relation, Gram equivalence) on
// generated data and reports the measured deviations.
std::vector<InvariantResult> verify_invariants(const VerifyOptions& options = {});

}  // namespace keysvm
