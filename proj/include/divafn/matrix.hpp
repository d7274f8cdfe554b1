#ifndef DIVAFN_MATRIX_HPP
#define DIVAFN_MATRIX_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "divafn/errors.hpp"

namespace divafn {

class Rng;

/// Dense real matrix, 64-bit entries, column-major storage. Dimensions are
/// fixed at construction; a default-constructed Matrix is the empty sentinel
/// used for not-yet-assigned members.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0)
      throw ContractViolation("matrix dimensions must be positive, got " +
                              std::to_string(rows) + "x" +
                              std::to_string(cols));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  /// Matrix with independent standard-normal entries.
  static Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng);

  bool empty() const { return data_.empty(); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const {
    return data_[c * rows_ + r];
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[c * rows_ + r];
  }

  const double* col(std::size_t c) const { return data_.data() + c * rows_; }
  double* col(std::size_t c) { return data_.data() + c * rows_; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Arithmetic. Shapes are validated; mismatches raise ContractViolation.
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix transpose(const Matrix& a);
Matrix multiply_at_b(const Matrix& a, const Matrix& b);  // Aᵀ·B
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);  // A·Bᵀ
void add_in_place(Matrix& a, const Matrix& b, double scale = 1.0);

/// Vertical concatenation [top; bottom].
Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix top_rows(const Matrix& a, std::size_t count);
Matrix bottom_rows(const Matrix& a, std::size_t count);
/// New matrix from the selected columns, in the given order.
Matrix select_columns(const Matrix& a, const std::vector<std::size_t>& idx);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double trace(const Matrix& a);
bool all_finite(const Matrix& a);
bool exactly_equal(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Solves the square system A·x = b by LU with partial pivoting.
/// b may have several right-hand-side columns.
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// log(1 + exp(x)) without overflow; >= max(0, x) for all finite x.
double stable_softplus(double x);

}  // namespace divafn

#endif  // DIVAFN_MATRIX_HPP
