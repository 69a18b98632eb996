#include "keysvm/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace keysvm {

KernelSpec KernelSpec::linear() {
  KernelSpec spec;
  spec.kind = KernelKind::linear;
  return spec;
}

KernelSpec KernelSpec::rbf(double gamma) {
  KernelSpec spec;
  spec.kind = KernelKind::rbf;
  spec.gamma = gamma;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::polynomial(double gamma, int degree, double coef0) {
  KernelSpec spec;
  spec.kind = KernelKind::polynomial;
  spec.gamma = gamma;
  spec.degree = degree;
  spec.coef0 = coef0;
  spec.validate();
  return spec;
}

namespace {

std::string trim_float(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string KernelSpec::describe() const {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::rbf:
      return "rbf(gamma=" + trim_float(gamma) + ")";
    case KernelKind::polynomial:
      return "poly(gamma=" + trim_float(gamma) + ",degree=" +
             std::to_string(degree) + ",coef0=" + trim_float(coef0) + ")";
  }
  return "unknown";
}

void KernelSpec::validate() const {
  if (kind != KernelKind::linear && !(gamma > 0.0)) {
    throw std::invalid_argument("kernel gamma must be > 0");
  }
  if (kind == KernelKind::polynomial && degree < 1) {
    throw std::invalid_argument("polynomial degree must be >= 1");
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("dot: dimension mismatch " +
                                std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[i];
  return sum;
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  const double d2 = dot(x, x) + dot(y, y) - 2.0 * dot(x, y);
  return d2 < 0.0 ? 0.0 : d2;
}

namespace {

double ipow(double base, int exp) {
  double result = 1.0;
  double b = base;
  for (int e = exp; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

}  // namespace

double kernel_eval(std::span<const double> x, std::span<const double> y,
                   const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::linear:
      return dot(x, y);
    case KernelKind::rbf:
      return std::exp(-spec.gamma * squared_distance(x, y));
    case KernelKind::polynomial:
      return ipow(spec.coef0 + spec.gamma * dot(x, y), spec.degree);
  }
  throw std::invalid_argument("unknown kernel kind");
}

GramMatrix gram(const std::vector<std::vector<double>>& X,
                const KernelSpec& spec) {
  if (X.empty()) throw std::invalid_argument("gram: empty input");
  const std::size_t dim = X.front().size();
  for (const auto& row : X) {
    if (row.size() != dim) {
      throw std::invalid_argument("gram: inconsistent vector dimensions");
    }
  }
  spec.validate();

  GramMatrix g;
  g.n = X.size();
  g.spec = spec;
  g.values.assign(g.n * g.n, 0.0);
  // Fill the lower triangle and mirror, so the matrix is exactly symmetric.
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = kernel_eval(X[i], X[j], spec);
      g.values[i * g.n + j] = v;
      g.values[j * g.n + i] = v;
    }
  }
  return g;
}

}  // namespace keysvm
