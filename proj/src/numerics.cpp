#include "fxbench/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxbench {

namespace {

std::string span_shape(std::size_t n) { return "[" + std::to_string(n) + "]"; }

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("matrix dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("matrix dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (data_.size() != rows * cols) {
    throw std::invalid_argument("matrix " + shape_string() + " given " +
                                std::to_string(data_.size()) + " values");
  }
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Vector matvec(const Matrix& w, std::span<const double> x) {
  Vector out(w.rows(), 0.0);
  matvec_add(w, x, out);
  return out;
}

void matvec_add(const Matrix& w, std::span<const double> x, std::span<double> out) {
  if (w.cols() != x.size() || w.rows() != out.size()) {
    throw std::invalid_argument("matvec shape mismatch: matrix " + w.shape_string() +
                                " with vector " + span_shape(x.size()) + " into " +
                                span_shape(out.size()));
  }
  const std::size_t cols = w.cols();
  const double* p = w.data().data();
  for (std::size_t i = 0; i < w.rows(); ++i, p += cols) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += p[j] * x[j];
    out[i] += acc;
  }
}

void matvec_transposed_add(const Matrix& w, std::span<const double> v, std::span<double> out) {
  if (w.rows() != v.size() || w.cols() != out.size()) {
    throw std::invalid_argument("transposed matvec shape mismatch: matrix " +
                                w.shape_string() + " with vector " + span_shape(v.size()) +
                                " into " + span_shape(out.size()));
  }
  const std::size_t cols = w.cols();
  const double* p = w.data().data();
  for (std::size_t i = 0; i < w.rows(); ++i, p += cols) {
    const double vi = v[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] += p[j] * vi;
  }
}

void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b) {
  if (g.rows() != a.size() || g.cols() != b.size()) {
    throw std::invalid_argument("outer product shape mismatch: matrix " + g.shape_string() +
                                " with " + span_shape(a.size()) + " x " + span_shape(b.size()));
  }
  const std::size_t cols = g.cols();
  double* p = g.data().data();
  for (std::size_t i = 0; i < g.rows(); ++i, p += cols) {
    const double ai = a[i];
    for (std::size_t j = 0; j < cols; ++j) p[j] += ai * b[j];
  }
}

const char* activation_name(Activation kind) {
  return kind == Activation::sigmoid ? "sigmoid" : "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double sigmoid(double z) {
  // Split on sign so exp never overflows.
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double activate(Activation kind, double z) {
  return kind == Activation::sigmoid ? sigmoid(z) : std::tanh(z);
}

double activation_deriv(Activation kind, double y) {
  return kind == Activation::sigmoid ? y * (1.0 - y) : 1.0 - y * y;
}

Vector activation(Activation kind, std::span<const double> v) {
  Vector out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [kind](double z) { return activate(kind, z); });
  return out;
}

Vector activation_deriv(Activation kind, std::span<const double> y) {
  Vector out(y.size());
  std::transform(y.begin(), y.end(), out.begin(),
                 [kind](double v) { return activation_deriv(kind, v); });
  return out;
}

}  // namespace fxbench
