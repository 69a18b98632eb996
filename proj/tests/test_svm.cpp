#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "keysvm/rng.hpp"
#include "keysvm/svm.hpp"
#include "qp_oracle.hpp"

using namespace keysvm;

namespace {

std::vector<double> kernel_matrix(const std::vector<std::vector<double>>& X,
                                  const KernelSpec& spec) {
  const std::size_t n = X.size();
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      K[i * n + j] = kernel_eval(X[i], X[j], spec);
    }
  }
  return K;
}

// Two well separated 2-D blobs around (0,0) and (6,6).
BinaryProblem blob_problem(SplitMix64& rng, int per_class, double C,
                           const KernelSpec& kernel) {
  BinaryProblem problem;
  problem.C = C;
  problem.kernel = kernel;
  for (int i = 0; i < per_class; ++i) {
    problem.X.push_back({rng.next_unit(), rng.next_unit()});
    problem.y.push_back(-1);
    problem.X.push_back({6.0 + rng.next_unit(), 6.0 + rng.next_unit()});
    problem.y.push_back(1);
  }
  return problem;
}

}  // namespace

TEST_CASE("two symmetric points give the analytic max-margin solution") {
  BinaryProblem problem;
  problem.X = {{-1.0}, {1.0}};
  problem.y = {-1, 1};
  problem.C = 1000.0;
  problem.kernel = KernelSpec::linear();

  const BinaryTrainResult result = train_binary(problem);

  CHECK(std::fabs(result.model.bias) < 1e-6);
  CHECK(predict_binary(result.model, std::vector<double>{0.0}).margin ==
        doctest::Approx(0.0).epsilon(1e-6));

  // margin points sit exactly on the margin: y * f(x) = 1
  for (std::size_t i = 0; i < 2; ++i) {
    const double margin = predict_binary(result.model, problem.X[i]).margin;
    CHECK(problem.y[i] * margin == doctest::Approx(1.0).epsilon(1e-6));
  }

  // w = sum coeff_k * sv_k = 1 for this configuration
  double w = 0.0;
  for (std::size_t k = 0; k < result.model.support_vectors.size(); ++k) {
    w += result.model.coeffs[k] * result.model.support_vectors[k][0];
  }
  CHECK(w == doctest::Approx(1.0).epsilon(1e-6));

  // alpha = 0.5 each; dual optimum matches the oracle
  CHECK(result.alpha[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(result.alpha[1] == doctest::Approx(0.5).epsilon(1e-6));
  const double oracle = qp_oracle::dual_optimum(
      kernel_matrix(problem.X, problem.kernel), problem.y, problem.C);
  CHECK(std::fabs(result.dual_objective - oracle) < 1e-4);
}

TEST_CASE("separable blobs train to accuracy 1.0 with valid duals") {
  SplitMix64 rng(42);
  const BinaryProblem problem =
      blob_problem(rng, 20, 1.0, KernelSpec::linear());
  const BinaryTrainResult result = train_binary(problem);

  for (std::size_t i = 0; i < problem.X.size(); ++i) {
    CHECK(predict_binary(result.model, problem.X[i]).label == problem.y[i]);
  }
  CHECK(result.max_kkt_violation <= 1e-3);
  CHECK(result.equality_residual < 1e-6);
  for (double a : result.alpha) {
    CHECK(a >= 0.0);
    CHECK(a <= problem.C);
  }
}

TEST_CASE("xor is separated by the rbf kernel and matches the dual oracle") {
  BinaryProblem problem;
  problem.X = {{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}};
  problem.y = {1, 1, -1, -1};
  problem.C = 1000.0;
  problem.kernel = KernelSpec::rbf(1.0);

  const BinaryTrainResult result = train_binary(problem);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(predict_binary(result.model, problem.X[i]).label == problem.y[i]);
  }
  const double oracle = qp_oracle::dual_optimum(
      kernel_matrix(problem.X, problem.kernel), problem.y, problem.C);
  CHECK(std::fabs(result.dual_objective - oracle) < 1e-4);
}

TEST_CASE("smo dual optimum matches the active-set oracle at small n") {
  SplitMix64 rng(1007);
  const std::vector<KernelSpec> kernels = {
      KernelSpec::linear(), KernelSpec::rbf(0.5),
      KernelSpec::polynomial(1.0, 2, 1.0)};
  for (int round = 0; round < 30; ++round) {
    const std::size_t n = 4 + rng.next_below(3);  // 4..6
    BinaryProblem problem;
    problem.kernel = kernels[round % kernels.size()];
    problem.C = (round % 2 == 0) ? 1.0 : 10.0;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      problem.X.push_back(
          {rng.next_unit() * 4.0 - 2.0, rng.next_unit() * 4.0 - 2.0});
      const int label = rng.next_below(2) == 0 ? -1 : 1;
      problem.y.push_back(label);
      (label == 1 ? has_pos : has_neg) = true;
    }
    if (!has_pos) problem.y[0] = 1;
    if (!has_neg) problem.y[1] = -1;

    const TrainOptions options{1e-6, 20'000'000, false};
    const BinaryTrainResult result = train_binary(problem, options);
    const double oracle = qp_oracle::dual_optimum(
        kernel_matrix(problem.X, problem.kernel), problem.y, problem.C);
    CHECK(std::fabs(result.dual_objective - oracle) < 1e-4);

    for (double a : result.alpha) {
      CHECK(a >= 0.0);
      CHECK(a <= problem.C);
    }
    CHECK(result.equality_residual < 1e-6);
    CHECK(result.max_kkt_violation <= options.tol + 1e-9);
  }
}

TEST_CASE("dual objective is non-decreasing across smo iterations") {
  SplitMix64 rng(77);
  BinaryProblem problem = blob_problem(rng, 15, 5.0, KernelSpec::rbf(0.2));
  // overlap the blobs a little so the solver has real work to do
  for (std::size_t i = 0; i < problem.X.size(); i += 3) {
    problem.X[i][0] += 3.0;
  }
  TrainOptions options;
  options.record_objective = true;
  const BinaryTrainResult result = train_binary(problem, options);
  REQUIRE(result.objective_trace.size() == result.iterations);
  for (std::size_t i = 1; i < result.objective_trace.size(); ++i) {
    CHECK(result.objective_trace[i] >=
          result.objective_trace[i - 1] - 1e-10);
  }
}

TEST_CASE("margins match a direct sum over support vectors") {
  SplitMix64 rng(300);
  BinaryModel model;
  model.kernel = KernelSpec::rbf(0.3);
  model.bias = 0.25;
  for (int k = 0; k < 10; ++k) {
    model.support_vectors.push_back({rng.next_unit(), rng.next_unit()});
    model.coeffs.push_back(rng.next_unit() * 4.0 - 2.0);
  }
  for (int round = 0; round < 10; ++round) {
    const std::vector<double> x{rng.next_unit() * 2.0, rng.next_unit() * 2.0};
    double want = model.bias;
    for (std::size_t k = 0; k < model.support_vectors.size(); ++k) {
      double d2 = 0.0;
      for (std::size_t t = 0; t < x.size(); ++t) {
        const double diff = model.support_vectors[k][t] - x[t];
        d2 += diff * diff;
      }
      want += model.coeffs[k] * std::exp(-0.3 * d2);
    }
    CHECK(predict_binary(model, x).margin ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("far from all support vectors the rbf margin decays to the bias") {
  SplitMix64 rng(8);
  const BinaryProblem problem =
      blob_problem(rng, 10, 10.0, KernelSpec::rbf(1.0));
  const BinaryTrainResult result = train_binary(problem);
  const BinaryPrediction far =
      predict_binary(result.model, std::vector<double>{1e4, -1e4});
  CHECK(far.margin == doctest::Approx(result.model.bias).epsilon(1e-9));
  const int want =
      result.model.bias > 0.0 ? 1 : -1;
  CHECK(far.label == want);
}

TEST_CASE("defective problems are rejected") {
  BinaryProblem problem;
  problem.X = {{0.0}, {1.0}};
  problem.y = {1, 1};  // single class
  problem.kernel = KernelSpec::linear();
  CHECK_THROWS_AS(train_binary(problem), std::invalid_argument);

  problem.y = {1, 2};  // bad label
  CHECK_THROWS_AS(train_binary(problem), std::invalid_argument);

  problem.y = {1, -1};
  problem.C = -1.0;
  CHECK_THROWS_AS(train_binary(problem), std::invalid_argument);

  CHECK_THROWS_AS(
      predict_binary(train_binary({{{0.0}, {1.0}}, {1, -1}, 1.0,
                                   KernelSpec::linear()})
                         .model,
                     std::vector<double>{0.0, 1.0}),
      std::invalid_argument);
}

TEST_CASE("non-convergence error carries the iteration count") {
  SplitMix64 rng(1);
  BinaryProblem problem = blob_problem(rng, 10, 1.0, KernelSpec::rbf(0.5));
  TrainOptions options;
  options.max_iterations = 1;
  try {
    train_binary(problem, options);
    FAIL("expected non-convergence");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("1 iterations") != std::string::npos);
  }
}

TEST_CASE("two-class multiclass reduces to the binary model") {
  SplitMix64 rng(55);
  std::vector<std::vector<double>> X;
  std::vector<int> labels;
  for (int i = 0; i < 15; ++i) {
    X.push_back({rng.next_unit(), rng.next_unit()});
    labels.push_back(0);
    X.push_back({4.0 + rng.next_unit(), 4.0 + rng.next_unit()});
    labels.push_back(1);
  }
  const TrainedModel model =
      train_multiclass(X, labels, 10.0, KernelSpec::rbf(0.5));
  REQUIRE(model.pairs.size() == 1);
  CHECK(model.class_labels == std::vector<int>{0, 1});
  for (std::size_t i = 0; i < X.size(); ++i) {
    CHECK(predict_multiclass(model, X[i]) == labels[i]);
  }
}

TEST_CASE("38 classes yield 703 pairwise models") {
  SplitMix64 rng(2);
  std::vector<std::vector<double>> X;
  std::vector<int> labels;
  for (int cls = 0; cls < 38; ++cls) {
    for (int i = 0; i < 2; ++i) {
      X.push_back({double(cls) * 3.0 + rng.next_unit(),
                   double(cls % 7), double(cls / 7)});
      labels.push_back(cls);
    }
  }
  const TrainedModel model =
      train_multiclass(X, labels, 10.0, KernelSpec::linear());
  CHECK(model.pairs.size() == 703);  // 38 * 37 / 2
}

TEST_CASE("three separable blobs classify a held-out grid correctly") {
  SplitMix64 rng(90);
  std::vector<std::vector<double>> X;
  std::vector<int> labels;
  const double centers[3][2] = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < 20; ++i) {
      X.push_back({centers[cls][0] + rng.next_unit(),
                   centers[cls][1] + rng.next_unit()});
      labels.push_back(cls);
    }
  }
  MulticlassTrainStats diag;
  const TrainedModel model = train_multiclass(X, labels, 100.0,
                                              KernelSpec::rbf(0.3),
                                              TrainOptions{}, &diag);
  CHECK(diag.max_kkt_violation <= 1e-3);
  CHECK(diag.max_equality_residual < 1e-6);

  // held-out points near each center, plus one deep inside a class region
  std::vector<int> predictions;
  for (int cls = 0; cls < 3; ++cls) {
    for (int i = 0; i < 10; ++i) {
      const std::vector<double> x{centers[cls][0] + rng.next_unit(),
                                  centers[cls][1] + rng.next_unit()};
      predictions.push_back(predict_multiclass(model, x));
      CHECK(predictions.back() == cls);
    }
  }
  CHECK(predict_multiclass(model, std::vector<double>{8.2, 0.3}) == 1);

  // determinism of prediction
  CHECK(predict_dataset(model, X) == predict_dataset(model, X));
}

TEST_CASE("empty classes and dimension mismatches are rejected") {
  CHECK_THROWS_AS(train_multiclass({{0.0}, {1.0}}, {0, 0}, 1.0,
                                   KernelSpec::linear()),
                  std::invalid_argument);
  SplitMix64 rng(4);
  std::vector<std::vector<double>> X;
  std::vector<int> labels;
  for (int i = 0; i < 6; ++i) {
    X.push_back({rng.next_unit(), double(i % 2) * 5.0});
    labels.push_back(i % 2);
  }
  const TrainedModel model =
      train_multiclass(X, labels, 1.0, KernelSpec::linear());
  CHECK_THROWS_AS(predict_multiclass(model, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("identical gram matrices give identical duals and predictions") {
  // Coordinate sign flips leave every inner product and distance bit-exact,
  // so the two training runs see identical kernel values and must follow
  // identical solver paths.
  SplitMix64 rng(2025);
  const std::size_t n = 24, dim = 10;
  std::vector<std::vector<double>> X(n, std::vector<double>(dim));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : X[i]) v = rng.next_unit() * 6.0 - 3.0;
    labels[i] = int(i % 3);
  }
  std::vector<double> signs(dim);
  for (double& s : signs) s = rng.next_below(2) == 0 ? -1.0 : 1.0;

  std::vector<std::vector<double>> Xs = X;
  for (auto& row : Xs) {
    for (std::size_t t = 0; t < dim; ++t) row[t] *= signs[t];
  }

  MulticlassTrainStats diag_a, diag_b;
  const KernelSpec kernel = KernelSpec::rbf(0.1);
  const TrainedModel model_a =
      train_multiclass(X, labels, 5.0, kernel, TrainOptions{}, &diag_a);
  const TrainedModel model_b =
      train_multiclass(Xs, labels, 5.0, kernel, TrainOptions{}, &diag_b);

  REQUIRE(model_a.pairs.size() == model_b.pairs.size());
  for (std::size_t p = 0; p < model_a.pairs.size(); ++p) {
    REQUIRE(model_a.pairs[p].coeff.size() == model_b.pairs[p].coeff.size());
    for (std::size_t k = 0; k < model_a.pairs[p].coeff.size(); ++k) {
      CHECK(std::fabs(model_a.pairs[p].coeff[k] -
                      model_b.pairs[p].coeff[k]) < 1e-8);
    }
    CHECK(std::fabs(model_a.pairs[p].bias - model_b.pairs[p].bias) < 1e-8);
  }

  for (int round = 0; round < 20; ++round) {
    std::vector<double> x(dim), xs(dim);
    for (std::size_t t = 0; t < dim; ++t) {
      x[t] = rng.next_unit() * 6.0 - 3.0;
      xs[t] = x[t] * signs[t];
    }
    CHECK(predict_multiclass(model_a, x) == predict_multiclass(model_b, xs));
  }
}
