#include "aqs/matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace aqs {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape() +
                                " vs " + b.shape() + ")");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix: dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw std::invalid_argument("Matrix::from_rows: ragged rows");
    }
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  Matrix m(values.size(), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return m;
}

bool Matrix::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + a.shape() + " vs " +
                                b.shape() + ")");
  }
  Matrix out(a.rows(), b.cols());
  matmul_acc(out, a, b);
  return out;
}

void matmul_acc(Matrix& acc, const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows() || acc.rows() != a.rows() || acc.cols() != b.cols()) {
    throw std::invalid_argument("matmul_acc: shape mismatch (" + acc.shape() + " += " +
                                a.shape() + " * " + b.shape() + ")");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = acc.row(i);
    const double* a_row = a.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double aij = a_row[j];
      const double* b_row = b.row(j);
      for (std::size_t t = 0; t < m; ++t) out_row[t] += aij * b_row[t];
    }
  }
}

void matmul_nt_acc(Matrix& acc, const Matrix& a, const Matrix& b) {
  // acc += a * b^T
  if (a.cols() != b.cols() || acc.rows() != a.rows() || acc.cols() != b.rows()) {
    throw std::invalid_argument("matmul_nt_acc: shape mismatch (" + acc.shape() + " += " +
                                a.shape() + " * " + b.shape() + "^T)");
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double* out_row = acc.row(i);
    const double* a_row = a.row(i);
    for (std::size_t t = 0; t < m; ++t) {
      const double* b_row = b.row(t);
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) sum += a_row[j] * b_row[j];
      out_row[t] += sum;
    }
  }
}

void matmul_tn_acc(Matrix& acc, const Matrix& a, const Matrix& b) {
  // acc += a^T * b
  if (a.rows() != b.rows() || acc.rows() != a.cols() || acc.cols() != b.cols()) {
    throw std::invalid_argument("matmul_tn_acc: shape mismatch (" + acc.shape() + " += " +
                                a.shape() + "^T * " + b.shape() + ")");
  }
  const std::size_t n = a.cols(), k = a.rows(), m = b.cols();
  for (std::size_t j = 0; j < k; ++j) {
    const double* a_row = a.row(j);
    const double* b_row = b.row(j);
    for (std::size_t i = 0; i < n; ++i) {
      double* out_row = acc.row(i);
      const double aji = a_row[i];
      for (std::size_t t = 0; t < m; ++t) out_row[t] += aji * b_row[t];
    }
  }
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  add_in_place(out, b);
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "sub");
  Matrix out = a;
  double* o = out.data();
  const double* q = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] -= q[i];
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  double* o = out.data();
  const double* q = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] *= q[i];
  return out;
}

Matrix scale(const Matrix& a, double factor) {
  Matrix out = a;
  scale_in_place(out, factor);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix map_sigmoid(const Matrix& a) {
  Matrix out = a;
  double* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = sigmoid(o[i]);
  return out;
}

Matrix map_tanh(const Matrix& a) {
  Matrix out = a;
  double* o = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = std::tanh(o[i]);
  return out;
}

Matrix add_col_broadcast(const Matrix& a, const Matrix& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw std::invalid_argument("add_col_broadcast: shape mismatch (" + a.shape() + " vs " +
                                col.shape() + ")");
  }
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row(i);
    const double c = col(i, 0);
    for (std::size_t j = 0; j < a.cols(); ++j) out_row[j] += c;
  }
  return out;
}

Matrix sum_cols(const Matrix& a) {
  Matrix out(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = a.row(i);
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) sum += a_row[j];
    out(i, 0) = sum;
  }
  return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add_in_place");
  double* o = a.data();
  const double* q = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] += q[i];
}

void scale_in_place(Matrix& a, double factor) {
  double* o = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) o[i] *= factor;
}

double squared_norm(const Matrix& a) {
  double sum = 0.0;
  for (double v : a.values()) sum += v * v;
  return sum;
}

}  // namespace aqs
