// keysvm command line: dataset generation, keyed transformation, SVM
// training/evaluation, the full access-control experiment, and the
// transformation invariant checks.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "keysvm/dataset.hpp"
#include "keysvm/experiment.hpp"
#include "keysvm/image_io.hpp"
#include "keysvm/model_io.hpp"
#include "keysvm/svm.hpp"
#include "keysvm/transform.hpp"

namespace fs = std::filesystem;
using namespace keysvm;

namespace {

SecretKey key_from_option(const std::string& key_hex) {
  if (!key_hex.empty()) return SecretKey::from_hex(key_hex);
  const char* env = std::getenv("KEYSVM_KEY");
  if (env && *env) return SecretKey::from_hex(env);
  throw std::runtime_error(
      "no key given: pass --key <hex> or set KEYSVM_KEY");
}

KernelSpec kernel_from_options(const std::string& name, double gamma,
                               int degree, double coef0) {
  if (name == "rbf") return KernelSpec::rbf(gamma);
  if (name == "poly") return KernelSpec::polynomial(gamma, degree, coef0);
  if (name == "linear") return KernelSpec::linear();
  throw std::runtime_error("unknown kernel: " + name);
}

LabeledDataset load_image_dir(const std::string& dir, int resize_h,
                              int resize_w, bool strict) {
  LoadOptions options;
  options.strict = strict;
  options.resize_height = resize_h;
  options.resize_width = resize_w;
  return load_directory(dir, options);
}

void print_accuracy(const char* tag, const std::vector<int>& predictions,
                    const std::vector<int>& truth) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i] == truth[i]) ++correct;
  }
  std::printf("%s accuracy %.4f (%zu/%zu correct)\n", tag,
              double(correct) / double(truth.size()), correct, truth.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"key-based block-wise image transformation for SVM access control"};
  app.require_subcommand(1);

  // ---- gen-synth ----------------------------------------------------------
  auto* gen = app.add_subcommand(
      "gen-synth", "generate a synthetic labeled image set (one dir per class)");
  SynthSpec synth;
  std::string gen_out, gen_format = "pgm";
  gen->add_option("--classes", synth.classes, "number of classes");
  gen->add_option("--per-class", synth.per_class, "images per class");
  gen->add_option("--height", synth.height, "image height");
  gen->add_option("--width", synth.width, "image width");
  gen->add_option("--seed", synth.seed, "generator seed");
  gen->add_option("--noise-sigma", synth.noise_sigma, "per-sample noise scale");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--format", gen_format, "pgm or png")
      ->check(CLI::IsMember({"pgm", "png"}));

  // ---- transform ----------------------------------------------------------
  auto* tr = app.add_subcommand(
      "transform", "apply the keyed transformation to an image directory");
  std::string tr_key, tr_steps = "block_permutation,pixel_shuffle,bit_flip,zscore";
  std::string tr_input, tr_output, tr_stats_in, tr_stats_out;
  int tr_block = 2, tr_resize_h = 0, tr_resize_w = 0;
  tr->add_option("--key", tr_key, "master key, hex (or env KEYSVM_KEY)");
  tr->add_option("--block-size", tr_block, "block size M");
  tr->add_option("--steps", tr_steps,
                 "comma list of block_permutation,pixel_shuffle,bit_flip,zscore"
                 " (or 'none')");
  tr->add_option("--input", tr_input, "image directory root/<class>/*")
      ->required();
  tr->add_option("--output", tr_output, "output dataset container")->required();
  tr->add_option("--stats", tr_stats_in,
                 "apply these normalization stats instead of fitting");
  tr->add_option("--stats-out", tr_stats_out, "write fitted stats here");
  tr->add_option("--resize-height", tr_resize_h, "resize before transforming");
  tr->add_option("--resize-width", tr_resize_w, "resize before transforming");
  bool tr_strict = true;
  tr->add_flag("--strict,!--lenient", tr_strict,
               "fail on an undecodable image vs warn and skip");

  // ---- train --------------------------------------------------------------
  auto* train_cmd = app.add_subcommand(
      "train", "transform a training directory and train a one-vs-one SVM");
  std::string train_key, train_steps = "block_permutation,pixel_shuffle,bit_flip,zscore";
  std::string train_dir, model_out, train_kernel = "rbf";
  double train_C = 512.0, train_gamma = 1e-4, train_coef0 = 1.0,
         train_tol = 1e-3;
  int train_degree = 2, train_block = 2, train_resize_h = 0, train_resize_w = 0;
  train_cmd->add_option("--key", train_key, "master key, hex (or env KEYSVM_KEY)");
  train_cmd->add_option("--block-size", train_block, "block size M");
  train_cmd->add_option("--steps", train_steps, "transform steps (or 'none')");
  train_cmd->add_option("--kernel", train_kernel, "rbf, poly, or linear")
      ->check(CLI::IsMember({"rbf", "poly", "linear"}));
  train_cmd->add_option("--C", train_C, "soft-margin penalty");
  train_cmd->add_option("--gamma", train_gamma, "kernel gamma");
  train_cmd->add_option("--degree", train_degree, "polynomial degree");
  train_cmd->add_option("--coef0", train_coef0, "polynomial coef0");
  train_cmd->add_option("--tol", train_tol, "solver tolerance");
  train_cmd->add_option("--train-dir", train_dir, "training image directory")
      ->required();
  train_cmd->add_option("--model-out", model_out, "model file")->required();
  train_cmd->add_option("--resize-height", train_resize_h, "resize input");
  train_cmd->add_option("--resize-width", train_resize_w, "resize input");
  bool train_strict = true;
  train_cmd->add_flag("--strict,!--lenient", train_strict,
                      "fail on an undecodable image vs warn and skip");

  // ---- eval ---------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "eval", "evaluate a model on a test directory, with or without the key");
  std::string eval_model, eval_dir, eval_key, eval_container, eval_stats;
  std::string eval_no_key_norm = "baseline-stats";
  bool eval_no_key = false;
  int eval_resize_h = 0, eval_resize_w = 0;
  eval_cmd->add_option("--model", eval_model, "model file")->required();
  eval_cmd->add_option("--test-dir", eval_dir, "test image directory");
  eval_cmd->add_option("--test-data", eval_container,
                       "pre-transformed dataset container (skips transform)");
  eval_cmd->add_option("--key", eval_key, "master key, hex (or env KEYSVM_KEY)");
  eval_cmd->add_flag("--no-key", eval_no_key,
                     "evaluate the without-key path (raw test data)");
  eval_cmd->add_option("--no-key-normalization", eval_no_key_norm,
                       "baseline-stats (z-score with --stats) or raw")
      ->check(CLI::IsMember({"baseline-stats", "raw"}));
  eval_cmd->add_option("--stats", eval_stats,
                       "stats fitted on the untransformed training set "
                       "(required for --no-key baseline-stats)");
  eval_cmd->add_option("--resize-height", eval_resize_h, "resize input");
  eval_cmd->add_option("--resize-width", eval_resize_w, "resize input");
  bool eval_strict = true;
  eval_cmd->add_flag("--strict,!--lenient", eval_strict,
                     "fail on an undecodable image vs warn and skip");

  // ---- experiment ---------------------------------------------------------
  auto* exp_cmd = app.add_subcommand(
      "experiment", "run the full protocol: baseline, with key, without key");
  std::string exp_config;
  std::string exp_dataset_dir, exp_key, exp_kernel = "rbf";
  std::string exp_block_sizes = "2,5", exp_no_key_norm = "baseline-stats";
  std::string exp_baseline_norm = "zscore";
  std::string exp_report_text, exp_report_csv;
  SynthSpec exp_synth;
  int exp_split_train = 30, exp_split_test = 10;
  int exp_resize_h = 0, exp_resize_w = 0, exp_degree = 2;
  double exp_C = 512.0, exp_gamma = 1e-4, exp_coef0 = 1.0, exp_tol = 1e-3;
  exp_cmd->add_option("--config", exp_config,
                      "config file (other flags override nothing when set)");
  exp_cmd->add_option("--dataset-dir", exp_dataset_dir,
                      "image directory (default: synthetic data)");
  exp_cmd->add_option("--classes", exp_synth.classes, "synthetic classes");
  exp_cmd->add_option("--per-class", exp_synth.per_class, "synthetic images per class");
  exp_cmd->add_option("--height", exp_synth.height, "synthetic image height");
  exp_cmd->add_option("--width", exp_synth.width, "synthetic image width");
  exp_cmd->add_option("--seed", exp_synth.seed, "synthetic generator seed");
  exp_cmd->add_option("--split-train", exp_split_train, "train images per class");
  exp_cmd->add_option("--split-test", exp_split_test, "test images per class");
  exp_cmd->add_option("--key", exp_key, "master key, hex (or env KEYSVM_KEY)");
  exp_cmd->add_option("--block-sizes", exp_block_sizes, "comma list, e.g. 2,5");
  exp_cmd->add_option("--kernel", exp_kernel, "rbf, poly, or linear")
      ->check(CLI::IsMember({"rbf", "poly", "linear"}));
  exp_cmd->add_option("--C", exp_C, "soft-margin penalty");
  exp_cmd->add_option("--gamma", exp_gamma, "kernel gamma");
  exp_cmd->add_option("--degree", exp_degree, "polynomial degree");
  exp_cmd->add_option("--coef0", exp_coef0, "polynomial coef0");
  exp_cmd->add_option("--tol", exp_tol, "solver tolerance");
  exp_cmd->add_option("--resize-height", exp_resize_h, "resize input");
  exp_cmd->add_option("--resize-width", exp_resize_w, "resize input");
  exp_cmd->add_option("--no-key-normalization", exp_no_key_norm,
                      "baseline-stats or raw")
      ->check(CLI::IsMember({"baseline-stats", "raw"}));
  exp_cmd->add_option("--baseline-normalization", exp_baseline_norm,
                      "zscore or raw")
      ->check(CLI::IsMember({"zscore", "raw"}));
  exp_cmd->add_option("--report-text", exp_report_text, "write text report");
  exp_cmd->add_option("--report-csv", exp_report_csv, "write CSV report");

  // ---- verify --------------------------------------------------------------
  auto* verify_cmd = app.add_subcommand(
      "verify", "run the transformation invariant suite on generated data");
  VerifyOptions verify_options;
  verify_cmd->add_option("--seed", verify_options.seed, "data seed");
  verify_cmd->add_flag("--inject-mask-mismatch",
                       verify_options.inject_mask_mismatch,
                       "fault injection: the shared-mask check must fail");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const LabeledDataset dataset = synth_faces(synth);
      for (int cls = 0; cls < dataset.class_count(); ++cls) {
        fs::create_directories(fs::path(gen_out) / dataset.class_names[cls]);
      }
      std::vector<int> counter(dataset.class_count(), 0);
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int cls = dataset.labels[i];
        char name[32];
        std::snprintf(name, sizeof(name), "img%04d.%s", counter[cls]++,
                      gen_format.c_str());
        const fs::path path =
            fs::path(gen_out) / dataset.class_names[cls] / name;
        if (gen_format == "pgm") {
          write_pnm(dataset.images[i], path);
        } else {
          write_png(dataset.images[i], path);
        }
      }
      std::printf("wrote %zu images across %d classes to %s\n", dataset.size(),
                  dataset.class_count(), gen_out.c_str());
    } else if (*tr) {
      TransformConfig config;
      config.block_size = tr_block;
      config.steps = parse_config_text("steps = " + tr_steps).steps;
      const bool keyed = config.steps.block_permutation ||
                         config.steps.pixel_shuffle || config.steps.bit_flip;
      if (keyed) config.key = key_from_option(tr_key);

      const LabeledDataset input =
          load_image_dir(tr_input, tr_resize_h, tr_resize_w, tr_strict);
      NormStats provided;
      const NormStats* stats = nullptr;
      if (!tr_stats_in.empty()) {
        provided = load_stats(tr_stats_in);
        stats = &provided;
      }
      const TransformResult result =
          transform_dataset(input.images, config, stats);
      save_container({result.images, input.labels}, tr_output);
      if (!tr_stats_out.empty()) {
        if (result.stats.empty()) {
          throw std::runtime_error(
              "--stats-out needs the zscore step (no stats were fitted)");
        }
        save_stats(result.stats, tr_stats_out);
      }
      std::printf("transformed %zu images -> %s\n", result.images.size(),
                  tr_output.c_str());
    } else if (*train_cmd) {
      TransformConfig config;
      config.block_size = train_block;
      config.steps = parse_config_text("steps = " + train_steps).steps;
      const bool keyed = config.steps.block_permutation ||
                         config.steps.pixel_shuffle || config.steps.bit_flip;
      if (keyed) config.key = key_from_option(train_key);

      const LabeledDataset data =
          load_image_dir(train_dir, train_resize_h, train_resize_w, train_strict);
      const TransformResult transformed =
          transform_dataset(data.images, config);
      const KernelSpec kernel = kernel_from_options(train_kernel, train_gamma,
                                                    train_degree, train_coef0);
      MulticlassTrainStats diag;
      TrainedModel model =
          train_multiclass(flatten_images(transformed.images), data.labels,
                           train_C, kernel, TrainOptions{train_tol}, &diag);
      model.stats = transformed.stats;
      model.fingerprint = {train_block, config.steps};
      save_model(model, model_out);
      std::printf(
          "trained %zu pairwise models on %zu images (%zu SMO iterations, "
          "max KKT violation %.2e) -> %s\n",
          model.pairs.size(), data.size(), diag.total_iterations,
          diag.max_kkt_violation, model_out.c_str());
    } else if (*eval_cmd) {
      const TrainedModel model = load_model(eval_model);
      std::vector<int> truth;
      std::vector<std::vector<double>> features;

      if (!eval_container.empty()) {
        const DatasetContainer data = load_container(eval_container);
        truth = data.labels;
        features = flatten_images(data.images);
      } else if (!eval_dir.empty()) {
        const LabeledDataset data =
            load_image_dir(eval_dir, eval_resize_h, eval_resize_w, eval_strict);
        truth = data.labels;
        if (eval_no_key) {
          if (eval_no_key_norm == "baseline-stats") {
            if (eval_stats.empty()) {
              throw std::runtime_error(
                  "--no-key baseline-stats needs --stats (stats fitted on the "
                  "untransformed training set)");
            }
            const NormStats stats = load_stats(eval_stats);
            std::vector<ImageTensor> tmp;
            for (const auto& img : data.images) {
              tmp.push_back(zscore_apply(img, stats));
            }
            features = flatten_images(tmp);
          } else {
            features = flatten_images(data.images);
          }
        } else {
          TransformConfig config;
          config.block_size = model.fingerprint.block_size;
          config.steps = model.fingerprint.steps;
          const bool keyed = config.steps.block_permutation ||
                             config.steps.pixel_shuffle ||
                             config.steps.bit_flip;
          if (keyed) config.key = key_from_option(eval_key);
          const NormStats* stats =
              model.stats.empty() ? nullptr : &model.stats;
          const TransformResult transformed =
              transform_dataset(data.images, config, stats);
          features = flatten_images(transformed.images);
        }
      } else {
        throw std::runtime_error("eval needs --test-dir or --test-data");
      }

      const std::vector<int> predictions = predict_dataset(model, features);
      print_accuracy(eval_no_key ? "without-key" : "with-key", predictions,
                     truth);
    } else if (*exp_cmd) {
      ExperimentConfig config;
      if (!exp_config.empty()) {
        config = parse_config_file(exp_config);
      } else {
        config.synth = exp_synth;
        config.split = {exp_split_train, exp_split_test};
        config.resize_height = exp_resize_h;
        config.resize_width = exp_resize_w;
        if (!exp_dataset_dir.empty()) {
          config.source = DatasetSource::directory;
          config.dataset_dir = exp_dataset_dir;
        }
        config.key_hex = exp_key;
        config.block_sizes =
            parse_config_text("block_sizes = " + exp_block_sizes).block_sizes;
        config.kernel = kernel_from_options(exp_kernel, exp_gamma, exp_degree,
                                            exp_coef0);
        config.C = exp_C;
        config.tol = exp_tol;
        config.no_key_normalization =
            exp_no_key_norm == "raw" ? NoKeyNormalization::raw
                                     : NoKeyNormalization::baseline_stats;
        config.baseline_normalization =
            exp_baseline_norm == "raw" ? BaselineNormalization::raw
                                       : BaselineNormalization::zscore;
        config.report_text_path = exp_report_text;
        config.report_csv_path = exp_report_csv;
        if (config.key_hex.empty()) {
          const char* env = std::getenv("KEYSVM_KEY");
          if (env) config.key_hex = env;
        }
      }
      const Report report = run_protocol(config);
      std::fputs(render_report_text(report).c_str(), stdout);
      if (!config.report_text_path.empty()) {
        emit_report(report, config.report_text_path, ReportFormat::text);
      }
      if (!config.report_csv_path.empty()) {
        emit_report(report, config.report_csv_path, ReportFormat::csv);
      }
      for (const ReportRow& row : report.rows) {
        if (!row.matches_baseline) {
          std::fprintf(stderr,
                       "error: %s with-key predictions differ from baseline\n",
                       row.transform_label.c_str());
          return 1;
        }
      }
    } else if (*verify_cmd) {
      const std::vector<InvariantResult> results =
          verify_invariants(verify_options);
      bool all_pass = true;
      for (const InvariantResult& r : results) {
        std::printf("[%s] %-58s max deviation %.3e%s%s\n",
                    r.pass ? "PASS" : "FAIL", r.name.c_str(), r.max_deviation,
                    r.note.empty() ? "" : "  -- ", r.note.c_str());
        all_pass = all_pass && r.pass;
      }
      if (!all_pass) return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
