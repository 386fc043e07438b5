#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace aqs {

// Dense row-major matrix of doubles; the numeric carrier for the whole
// engine. Column vectors are n-by-1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double* row(std::size_t r) { return values_.data() + r * cols_; }
  const double* row(std::size_t r) const { return values_.data() + r * cols_; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<const double> values() const { return values_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  std::string shape() const;  // "3x4"

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Logistic sigmoid, evaluated in the branch form that never overflows:
// exp is only applied to non-positive arguments.
double sigmoid(double x);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
Matrix transpose(const Matrix& a);
Matrix map_sigmoid(const Matrix& a);
Matrix map_tanh(const Matrix& a);

// a is n-by-B, col is n-by-1: adds col to every column of a.
Matrix add_col_broadcast(const Matrix& a, const Matrix& col);
// Sums the columns of a into an n-by-1 vector.
Matrix sum_cols(const Matrix& a);

void add_in_place(Matrix& a, const Matrix& b);
void scale_in_place(Matrix& a, double factor);

// acc += a * b, acc += a * b^T, acc += a^T * b. Shapes are checked.
void matmul_acc(Matrix& acc, const Matrix& a, const Matrix& b);
void matmul_nt_acc(Matrix& acc, const Matrix& a, const Matrix& b);
void matmul_tn_acc(Matrix& acc, const Matrix& a, const Matrix& b);

double squared_norm(const Matrix& a);

}  // namespace aqs
