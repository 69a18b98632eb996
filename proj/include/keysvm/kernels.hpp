#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace keysvm {

enum class KernelKind : std::uint32_t { linear = 0, rbf = 1, polynomial = 2 };

// RBF:        exp(-gamma * ||x - y||^2)
// Polynomial: (coef0 + gamma * <x, y>)^degree
// Linear:     <x, y>
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;
  int degree = 3;
  double coef0 = 1.0;

  static KernelSpec linear();
  static KernelSpec rbf(double gamma);
  static KernelSpec polynomial(double gamma, int degree, double coef0 = 1.0);

  // e.g. "rbf(gamma=0.0001)" / "poly(gamma=0.001,degree=2,coef0=1)"
  std::string describe() const;
  // Throws std::invalid_argument on gamma <= 0 (rbf/poly) or degree < 1.
  void validate() const;

  bool operator==(const KernelSpec&) const = default;
};

double dot(std::span<const double> x, std::span<const double> y);
// Expanded form ||x||^2 + ||y||^2 - 2<x,y>, clamped at 0.
double squared_distance(std::span<const double> x, std::span<const double> y);

double kernel_eval(std::span<const double> x, std::span<const double> y,
                   const KernelSpec& spec);

struct GramMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n*n, symmetric by construction
  KernelSpec spec;

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

GramMatrix gram(const std::vector<std::vector<double>>& X,
                const KernelSpec& spec);

}  // namespace keysvm
