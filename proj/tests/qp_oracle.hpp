#pragma once

// Brute-force oracle for the SVM dual at tiny n, independent of the SMO
// path: enumerate every {at-lower, at-upper, free} assignment of the
// variables, solve the stationarity system on the free set, keep the best
// feasible candidate. The optimum's own active set is in the enumeration,
// so the best candidate value equals the true optimum.

#include <cmath>
#include <cstddef>
#include <vector>

namespace qp_oracle {

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_dense(std::vector<double> a, std::vector<double> b,
                        std::size_t n, std::vector<double>& x) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
    }
    if (std::fabs(a[pivot * n + col]) < 1e-12) return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
      b[r] -= factor * b[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double sum = b[r];
    for (std::size_t c = r + 1; c < n; ++c) sum -= a[r * n + c] * x[c];
    x[r] = sum / a[r * n + r];
  }
  return true;
}

// Maximizes sum(a) - 0.5 a'Qa with Q_ij = y_i y_j K_ij subject to
// 0 <= a <= C and y'a = 0. K is row-major n*n.
inline double dual_optimum(const std::vector<double>& K,
                           const std::vector<int>& y, double C) {
  const std::size_t n = y.size();
  const auto q = [&](std::size_t i, std::size_t j) {
    return double(y[i] * y[j]) * K[i * n + j];
  };
  const auto objective = [&](const std::vector<double>& alpha) {
    double sum = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += alpha[i];
      for (std::size_t j = 0; j < n; ++j) quad += alpha[i] * alpha[j] * q(i, j);
    }
    return sum - 0.5 * quad;
  };

  double best = -1e300;
  std::size_t states = 1;
  for (std::size_t i = 0; i < n; ++i) states *= 3;  // 0 = lower, 1 = upper, 2 = free

  for (std::size_t code = 0; code < states; ++code) {
    std::vector<int> state(n);
    std::size_t rest = code;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = int(rest % 3);
      rest /= 3;
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<std::size_t> free_set;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == 1) alpha[i] = C;
      if (state[i] == 2) free_set.push_back(i);
    }

    if (free_set.empty()) {
      double eq = 0.0;
      for (std::size_t i = 0; i < n; ++i) eq += y[i] * alpha[i];
      if (std::fabs(eq) > 1e-9) continue;
    } else {
      // Stationarity on the free set plus the equality constraint:
      //   sum_{j in F} Q_ij a_j + lambda y_i = 1 - sum_{j at bound} Q_ij a_j
      //   sum_{i in F} y_i a_i = - sum_{j at bound} y_j a_j
      const std::size_t f = free_set.size();
      std::vector<double> mat((f + 1) * (f + 1), 0.0);
      std::vector<double> rhs(f + 1, 0.0);
      for (std::size_t r = 0; r < f; ++r) {
        const std::size_t i = free_set[r];
        for (std::size_t c = 0; c < f; ++c) {
          mat[r * (f + 1) + c] = q(i, free_set[c]);
        }
        mat[r * (f + 1) + f] = double(y[i]);
        double bound_term = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (state[j] == 1) bound_term += q(i, j) * C;
        }
        rhs[r] = 1.0 - bound_term;
      }
      double eq_bound = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (state[j] == 1) eq_bound += y[j] * C;
      }
      for (std::size_t c = 0; c < f; ++c) {
        mat[f * (f + 1) + c] = double(y[free_set[c]]);
      }
      rhs[f] = -eq_bound;

      std::vector<double> solution;
      if (!solve_dense(mat, rhs, f + 1, solution)) continue;
      bool feasible = true;
      for (std::size_t r = 0; r < f; ++r) {
        if (solution[r] < -1e-9 || solution[r] > C + 1e-9) {
          feasible = false;
          break;
        }
        alpha[free_set[r]] = std::min(std::max(solution[r], 0.0), C);
      }
      if (!feasible) continue;
    }

    const double value = objective(alpha);
    if (value > best) best = value;
  }
  return best;
}

}  // namespace qp_oracle
