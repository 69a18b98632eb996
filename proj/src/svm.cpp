#include "keysvm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace keysvm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_problem(const BinaryProblem& problem) {
  if (problem.X.empty()) throw std::invalid_argument("svm: empty problem");
  if (problem.X.size() != problem.y.size()) {
    throw std::invalid_argument("svm: label count does not match sample count");
  }
  const std::size_t dim = problem.X.front().size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < problem.X.size(); ++i) {
    if (problem.X[i].size() != dim) {
      throw std::invalid_argument("svm: inconsistent feature dimensions");
    }
    if (problem.y[i] == 1) {
      has_pos = true;
    } else if (problem.y[i] == -1) {
      has_neg = true;
    } else {
      throw std::invalid_argument("svm: labels must be -1 or +1");
    }
  }
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("svm: both classes must be present");
  }
  if (!(problem.C > 0.0)) throw std::invalid_argument("svm: C must be > 0");
  problem.kernel.validate();
}

}  // namespace

BinaryTrainResult train_binary(const BinaryProblem& problem,
                               const TrainOptions& options) {
  validate_problem(problem);
  if (!(options.tol > 0.0)) throw std::invalid_argument("svm: tol must be > 0");

  const std::size_t n = problem.X.size();
  const double C = problem.C;
  const std::vector<int>& y = problem.y;

  // Dense kernel matrix; pair problems stay small enough for this.
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernel_eval(problem.X[i], problem.X[j], problem.kernel);
      K[i * n + j] = v;
      K[j * n + i] = v;
    }
  }

  // Dual: min 0.5 a'Qa - e'a with Q_ij = y_i y_j K_ij, 0 <= a <= C, y'a = 0.
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // grad_i = (Q alpha)_i - 1

  BinaryTrainResult result;
  std::size_t iter = 0;
  double gap = kInf;
  for (;; ++iter) {
    // Maximal violating pair: i maximizes -y_t grad_t over I_up, j
    // minimizes it over I_low. Strict comparisons keep the lowest index on
    // ties, which makes the solver deterministic.
    std::ptrdiff_t i = -1, j = -1;
    double m_up = -kInf, m_low = kInf;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool in_up = (y[t] == 1) ? alpha[t] < C : alpha[t] > 0.0;
      const bool in_low = (y[t] == 1) ? alpha[t] > 0.0 : alpha[t] < C;
      if (in_up && v > m_up) {
        m_up = v;
        i = std::ptrdiff_t(t);
      }
      if (in_low && v < m_low) {
        m_low = v;
        j = std::ptrdiff_t(t);
      }
    }
    gap = m_up - m_low;
    if (gap < options.tol) break;
    if (iter >= options.max_iterations) {
      throw std::runtime_error("svm: SMO did not converge within " +
                               std::to_string(options.max_iterations) +
                               " iterations (gap " + std::to_string(gap) +
                               ")");
    }

    const std::size_t a = std::size_t(i), b = std::size_t(j);
    const double Kaa = K[a * n + a], Kbb = K[b * n + b], Kab = K[a * n + b];
    const double old_a = alpha[a], old_b = alpha[b];

    double quad = Kaa + Kbb - 2.0 * Kab;
    if (quad <= 0.0) quad = 1e-12;

    if (y[a] != y[b]) {
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = alpha[a] - alpha[b];
      alpha[a] += delta;
      alpha[b] += delta;
      if (diff > 0.0) {
        if (alpha[b] < 0.0) {
          alpha[b] = 0.0;
          alpha[a] = diff;
        }
      } else {
        if (alpha[a] < 0.0) {
          alpha[a] = 0.0;
          alpha[b] = -diff;
        }
      }
      if (diff > 0.0) {
        if (alpha[a] > C) {
          alpha[a] = C;
          alpha[b] = C - diff;
        }
      } else {
        if (alpha[b] > C) {
          alpha[b] = C;
          alpha[a] = C + diff;
        }
      }
    } else {
      const double delta = (grad[a] - grad[b]) / quad;
      const double sum = alpha[a] + alpha[b];
      alpha[a] -= delta;
      alpha[b] += delta;
      if (sum > C) {
        if (alpha[a] > C) {
          alpha[a] = C;
          alpha[b] = sum - C;
        }
      } else {
        if (alpha[b] < 0.0) {
          alpha[b] = 0.0;
          alpha[a] = sum;
        }
      }
      if (sum > C) {
        if (alpha[b] > C) {
          alpha[b] = C;
          alpha[a] = sum - C;
        }
      } else {
        if (alpha[a] < 0.0) {
          alpha[a] = 0.0;
          alpha[b] = sum;
        }
      }
    }

    const double da = alpha[a] - old_a;
    const double db = alpha[b] - old_b;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[a] * K[t * n + a] * da + y[b] * K[t * n + b] * db);
    }

    if (options.record_objective) {
      double sum_alpha = 0.0, ag = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        sum_alpha += alpha[t];
        ag += alpha[t] * grad[t];
      }
      result.objective_trace.push_back(0.5 * (sum_alpha - ag));
    }
  }

  // Bias from the free vectors; midpoint of the bound interval otherwise.
  double rho;
  {
    double upper = kInf, lower = -kInf, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double yg = y[t] * grad[t];
      if (alpha[t] >= C) {
        if (y[t] == -1) {
          upper = std::min(upper, yg);
        } else {
          lower = std::max(lower, yg);
        }
      } else if (alpha[t] <= 0.0) {
        if (y[t] == 1) {
          upper = std::min(upper, yg);
        } else {
          lower = std::max(lower, yg);
        }
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    rho = n_free > 0 ? sum_free / double(n_free) : (upper + lower) / 2.0;
  }

  result.iterations = iter;
  result.gap = gap;
  result.alpha = alpha;

  double sum_alpha = 0.0, ag = 0.0, eq = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sum_alpha += alpha[t];
    ag += alpha[t] * grad[t];
    eq += alpha[t] * y[t];
  }
  result.dual_objective = 0.5 * (sum_alpha - ag);
  result.equality_residual = std::fabs(eq);

  BinaryModel model;
  model.kernel = problem.kernel;
  model.bias = -rho;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      model.support_vectors.push_back(problem.X[t]);
      model.coeffs.push_back(alpha[t] * y[t]);
    }
  }

  // KKT residuals against the margins of the final model.
  double max_violation = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double margin = predict_binary(model, problem.X[t]).margin;
    const double ym = y[t] * margin;
    double violation = 0.0;
    if (alpha[t] <= 0.0) {
      violation = std::max(0.0, 1.0 - ym);
    } else if (alpha[t] >= C) {
      violation = std::max(0.0, ym - 1.0);
    } else {
      violation = std::fabs(ym - 1.0);
    }
    max_violation = std::max(max_violation, violation);
  }
  result.max_kkt_violation = max_violation;
  result.model = std::move(model);
  return result;
}

BinaryPrediction predict_binary(const BinaryModel& model,
                                std::span<const double> x) {
  double margin = model.bias;
  for (std::size_t k = 0; k < model.support_vectors.size(); ++k) {
    if (model.support_vectors[k].size() != x.size()) {
      throw std::invalid_argument("predict: dimension mismatch");
    }
    margin += model.coeffs[k] * kernel_eval(model.support_vectors[k], x,
                                            model.kernel);
  }
  return {margin > 0.0 ? 1 : -1, margin};
}

TrainedModel train_multiclass(const std::vector<std::vector<double>>& X,
                              const std::vector<int>& labels, double C,
                              const KernelSpec& kernel,
                              const TrainOptions& options,
                              MulticlassTrainStats* diag) {
  if (X.empty() || X.size() != labels.size()) {
    throw std::invalid_argument("multiclass: empty or mismatched inputs");
  }
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) {
    throw std::invalid_argument("multiclass: need at least 2 classes");
  }

  TrainedModel model;
  model.kernel = kernel;
  model.C = C;
  model.class_labels = classes;

  std::map<std::size_t, std::uint32_t> table_index;  // global sample -> table slot
  const auto intern = [&](std::size_t global) {
    auto [it, inserted] = table_index.try_emplace(
        global, std::uint32_t(model.vectors.size()));
    if (inserted) model.vectors.push_back(X[global]);
    return it->second;
  };

  MulticlassTrainStats stats;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) {
      BinaryProblem sub;
      sub.C = C;
      sub.kernel = kernel;
      std::vector<std::size_t> origin;
      for (std::size_t t = 0; t < X.size(); ++t) {
        if (labels[t] == classes[a]) {
          sub.X.push_back(X[t]);
          sub.y.push_back(1);
          origin.push_back(t);
        } else if (labels[t] == classes[b]) {
          sub.X.push_back(X[t]);
          sub.y.push_back(-1);
          origin.push_back(t);
        }
      }

      BinaryTrainResult trained = train_binary(sub, options);
      stats.total_iterations += trained.iterations;
      stats.max_kkt_violation =
          std::max(stats.max_kkt_violation, trained.max_kkt_violation);
      stats.max_equality_residual =
          std::max(stats.max_equality_residual, trained.equality_residual);

      PairModel pair;
      pair.label_a = classes[a];
      pair.label_b = classes[b];
      pair.bias = trained.model.bias;
      for (std::size_t t = 0; t < sub.X.size(); ++t) {
        if (trained.alpha[t] > 0.0) {
          pair.sv_index.push_back(intern(origin[t]));
          pair.coeff.push_back(trained.alpha[t] * sub.y[t]);
        }
      }
      model.pairs.push_back(std::move(pair));
    }
  }
  if (diag) *diag = stats;
  return model;
}

int predict_multiclass(const TrainedModel& model, std::span<const double> x) {
  if (model.pairs.empty()) throw std::invalid_argument("predict: empty model");
  if (model.feature_dim() != x.size()) {
    throw std::invalid_argument("predict: dimension mismatch, model expects " +
                                std::to_string(model.feature_dim()) +
                                " features, got " + std::to_string(x.size()));
  }

  // Kernel row against the shared table, evaluated once per test point.
  std::vector<double> kval(model.vectors.size());
  for (std::size_t t = 0; t < model.vectors.size(); ++t) {
    kval[t] = kernel_eval(model.vectors[t], x, model.kernel);
  }

  std::map<int, int> votes;
  std::map<int, double> confidence;  // sum of |margin| over won contests
  for (int label : model.class_labels) {
    votes[label] = 0;
    confidence[label] = 0.0;
  }
  for (const PairModel& pair : model.pairs) {
    double margin = pair.bias;
    for (std::size_t k = 0; k < pair.sv_index.size(); ++k) {
      margin += pair.coeff[k] * kval[pair.sv_index[k]];
    }
    const int winner = margin > 0.0 ? pair.label_a : pair.label_b;
    votes[winner] += 1;
    confidence[winner] += std::fabs(margin);
  }

  int best = model.class_labels.front();
  for (int label : model.class_labels) {
    if (label == best) continue;
    if (votes[label] > votes[best] ||
        (votes[label] == votes[best] &&
         confidence[label] > confidence[best])) {
      best = label;  // remaining ties keep the lower label
    }
  }
  return best;
}

std::vector<int> predict_dataset(const TrainedModel& model,
                                 const std::vector<std::vector<double>>& X) {
  std::vector<int> out;
  out.reserve(X.size());
  for (const auto& x : X) out.push_back(predict_multiclass(model, x));
  return out;
}

}  // namespace keysvm
