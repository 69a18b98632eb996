#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "keysvm/kernels.hpp"
#include "keysvm/transform.hpp"

namespace keysvm {

struct BinaryProblem {
  std::vector<std::vector<double>> X;
  std::vector<int> y;  // -1 / +1, both classes present
  double C = 1.0;
  KernelSpec kernel;
};

struct TrainOptions {
  double tol = 1e-3;
  std::size_t max_iterations = 20'000'000;
  bool record_objective = false;  // keep the dual objective per iteration
};

struct BinaryModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coeffs;  // alpha_i * y_i per support vector
  double bias = 0.0;
  KernelSpec kernel;
};

struct BinaryTrainResult {
  BinaryModel model;
  std::vector<double> alpha;  // one per training sample, 0 <= alpha <= C
  std::size_t iterations = 0;
  double gap = 0.0;  // final working-set violation m(alpha) - M(alpha)
  double dual_objective = 0.0;
  double max_kkt_violation = 0.0;
  double equality_residual = 0.0;  // |sum alpha_i y_i|
  std::vector<double> objective_trace;  // filled when record_objective
};

// SMO with maximal-violating-pair selection (ties resolved to the lowest
// index, so training is deterministic for a fixed input order). Throws on
// single-class input; non-convergence raises std::runtime_error carrying the
// iteration count.
BinaryTrainResult train_binary(const BinaryProblem& problem,
                               const TrainOptions& options = {});

struct BinaryPrediction {
  int label = 0;  // +1 when margin > 0, else -1
  double margin = 0.0;
};

BinaryPrediction predict_binary(const BinaryModel& model,
                                std::span<const double> x);

struct TransformFingerprint {
  int block_size = 0;
  StepToggles steps;

  bool operator==(const TransformFingerprint&) const = default;
};

// One pairwise classifier. label_a < label_b; a positive margin votes for
// label_a. Support vectors are indices into TrainedModel::vectors.
struct PairModel {
  int label_a = 0;
  int label_b = 0;
  std::vector<std::uint32_t> sv_index;
  std::vector<double> coeff;
  double bias = 0.0;
};

// One-vs-one multiclass model. `vectors` is the shared table of training
// vectors that act as a support vector in at least one pair. The secret key
// is never stored here; only the transform shape (block size, step toggles)
// and the normalization stats travel with the model.
struct TrainedModel {
  KernelSpec kernel;
  double C = 1.0;
  std::vector<int> class_labels;  // ascending
  std::vector<std::vector<double>> vectors;
  std::vector<PairModel> pairs;
  NormStats stats;
  TransformFingerprint fingerprint;

  std::size_t feature_dim() const {
    return vectors.empty() ? 0 : vectors.front().size();
  }
};

struct MulticlassTrainStats {
  std::size_t total_iterations = 0;
  double max_kkt_violation = 0.0;
  double max_equality_residual = 0.0;
};

// Trains k(k-1)/2 pairwise models. Pairs are trained in ascending
// (label_a, label_b) order on each pair's samples in dataset order, so the
// result is deterministic. Throws when fewer than 2 classes are present.
TrainedModel train_multiclass(const std::vector<std::vector<double>>& X,
                              const std::vector<int>& labels, double C,
                              const KernelSpec& kernel,
                              const TrainOptions& options = {},
                              MulticlassTrainStats* diag = nullptr);

// Majority vote over the pairwise predictions. Ties are broken by the
// larger sum of |margin| over won contests, then by the lowest class label.
int predict_multiclass(const TrainedModel& model, std::span<const double> x);

std::vector<int> predict_dataset(const TrainedModel& model,
                                 const std::vector<std::vector<double>>& X);

}  // namespace keysvm
