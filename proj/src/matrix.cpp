#include "tlae/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tlae/error.hpp"

namespace tlae {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::contract: return "contract";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::config: return "config";
    case ErrorKind::data: return "data";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    fail(ErrorKind::dimension, "matrix data length " + std::to_string(data_.size()) +
                                   " does not match shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorKind::dimension, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::col_range(std::size_t begin, std::size_t end) const {
  if (begin > end || end > cols_) {
    fail(ErrorKind::dimension, "column range [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") out of bounds for " + shape_string());
  }
  const std::size_t w = end - begin;
  Matrix out(rows_, w);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(data_.data() + r * cols_ + begin, w, out.data_.data() + r * w);
  }
  return out;
}

Matrix Matrix::row_range(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) {
    fail(ErrorKind::dimension, "row range [" + std::to_string(begin) + ", " +
                                   std::to_string(end) + ") out of bounds for " + shape_string());
  }
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_), out.data_.begin());
  return out;
}

void Matrix::set_col_range(std::size_t begin, const Matrix& block) {
  if (block.rows_ != rows_ || begin + block.cols_ > cols_) {
    fail(ErrorKind::dimension, "cannot place block " + block.shape_string() + " at column " +
                                   std::to_string(begin) + " of " + shape_string());
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    std::copy_n(block.data_.data() + r * block.cols_, block.cols_,
                data_.data() + r * cols_ + begin);
  }
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorKind::dimension, std::string(what) + ": shape mismatch " + a.shape_string() +
                                   " vs " + b.shape_string());
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::dimension,
         "matmul: shape mismatch " + a.shape_string() + " x " + b.shape_string());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix out(n, m);
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = o.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ad[i * k + p];
      const double* brow = bd.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    fail(ErrorKind::dimension,
         "matmul_tn: shape mismatch " + a.shape_string() + "^T x " + b.shape_string());
  }
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  Matrix out(n, m);
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = bd.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ad[p * n + i];
      double* orow = o.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorKind::dimension,
         "matmul_nt: shape mismatch " + a.shape_string() + " x " + b.shape_string() + "^T");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Matrix out(n, m);
  auto o = out.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = ad.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = bd.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      o[i * m + j] = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

namespace {

bool is_binary(EwOp op) { return op == EwOp::add || op == EwOp::sub || op == EwOp::mul; }

}  // namespace

Matrix ew(EwOp op, const Matrix& a, const Matrix* b) {
  if (is_binary(op)) {
    if (b == nullptr) fail(ErrorKind::contract, "ew: binary op requires two operands");
    require_same_shape(a, *b, "ew");
  }
  Matrix out(a.rows(), a.cols());
  auto o = out.data();
  auto x = a.data();
  const std::size_t n = x.size();
  switch (op) {
    case EwOp::add: {
      auto y = b->data();
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i] + y[i];
      break;
    }
    case EwOp::sub: {
      auto y = b->data();
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i] - y[i];
      break;
    }
    case EwOp::mul: {
      auto y = b->data();
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i] * y[i];
      break;
    }
    case EwOp::relu:
      for (std::size_t i = 0; i < n; ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case EwOp::tanh:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::tanh(x[i]);
      break;
    case EwOp::sigmoid:
      for (std::size_t i = 0; i < n; ++i) o[i] = sigmoid(x[i]);
      break;
    case EwOp::exp:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::exp(x[i]);
      break;
    case EwOp::log:
      for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0)) {
          fail(ErrorKind::domain, "log of non-positive entry " + std::to_string(x[i]) +
                                      " at flat index " + std::to_string(i));
        }
        o[i] = std::log(x[i]);
      }
      break;
    case EwOp::abs:
      for (std::size_t i = 0; i < n; ++i) o[i] = std::fabs(x[i]);
      break;
  }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) { return ew(EwOp::add, a, &b); }
Matrix operator-(const Matrix& a, const Matrix& b) { return ew(EwOp::sub, a, &b); }
Matrix hadamard(const Matrix& a, const Matrix& b) { return ew(EwOp::mul, a, &b); }

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

Matrix hconcat(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const Matrix& m : blocks) {
    if (m.rows() != rows) {
      fail(ErrorKind::dimension, "hconcat: row mismatch " + blocks.front().shape_string() +
                                     " vs " + m.shape_string());
    }
    cols += m.cols();
  }
  Matrix out(rows, cols);
  std::size_t at = 0;
  for (const Matrix& m : blocks) {
    out.set_col_range(at, m);
    at += m.cols();
  }
  return out;
}

double sum(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace tlae
