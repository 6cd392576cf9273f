#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tlae {

// Dense row-major matrix of doubles. Column vectors are n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  // Copies of contiguous blocks; ranges are half-open.
  Matrix col_range(std::size_t begin, std::size_t end) const;
  Matrix row_range(std::size_t begin, std::size_t end) const;
  Matrix col(std::size_t c) const { return col_range(c, c + 1); }
  void set_col_range(std::size_t begin, const Matrix& block);

  std::string shape_string() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class EwOp { add, sub, mul, relu, tanh, sigmoid, exp, log, abs };

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b and a * b^T without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// Elementwise op. Binary ops need `b` of equal shape; unary ops ignore it.
Matrix ew(EwOp op, const Matrix& a, const Matrix* b = nullptr);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix hconcat(std::span<const Matrix> blocks);

double sum(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace tlae
