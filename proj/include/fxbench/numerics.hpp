#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fxbench {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. A default-constructed Matrix is empty
// (0x0); every sized Matrix has positive rows and cols.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  void fill(double value);
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  // "RxC"
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// W x. Throws std::invalid_argument naming both shapes when W.cols != x.size().
Vector matvec(const Matrix& w, std::span<const double> x);

// out += W x.
void matvec_add(const Matrix& w, std::span<const double> x, std::span<double> out);

// out += W^T v.
void matvec_transposed_add(const Matrix& w, std::span<const double> v, std::span<double> out);

// g += a b^T.
void add_outer(Matrix& g, std::span<const double> a, std::span<const double> b);

enum class Activation { sigmoid, tanh };

const char* activation_name(Activation kind);
Activation parse_activation(std::string_view name);

double sigmoid(double z);
double activate(Activation kind, double z);
// Derivative expressed through the activation output y.
double activation_deriv(Activation kind, double y);

Vector activation(Activation kind, std::span<const double> v);
Vector activation_deriv(Activation kind, std::span<const double> y);

}  // namespace fxbench
