#include "divafn/matrix.hpp"

#include <cmath>
#include <string>

#include "divafn/rng.hpp"

namespace divafn {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw ContractViolation(std::string(op) + ": shape mismatch " +
                            shape_of(a) + " vs " + shape_of(b));
}

}  // namespace

Matrix Matrix::gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
  return m;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("multiply: inner dimensions differ, " +
                            shape_of(a) + " * " + shape_of(b));
  Matrix c(a.rows(), b.cols());
  const std::size_t rows = a.rows();
  for (std::size_t j = 0; j < b.cols(); ++j) {
    double* cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      const double* ak = a.col(k);
      for (std::size_t i = 0; i < rows; ++i) cj[i] += bkj * ak[i];
    }
  }
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ContractViolation("multiply_at_b: row counts differ, " +
                            shape_of(a) + " vs " + shape_of(b));
  Matrix c(a.cols(), b.cols());
  const std::size_t depth = a.rows();
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const double* bj = b.col(j);
    double* cj = c.col(j);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double* ai = a.col(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < depth; ++k) acc += ai[k] * bj[k];
      cj[i] = acc;
    }
  }
  return c;
}

Matrix multiply_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw ContractViolation("multiply_a_bt: column counts differ, " +
                            shape_of(a) + " vs " + shape_of(b));
  Matrix c(a.rows(), b.rows());
  const std::size_t rows = a.rows();
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double* ak = a.col(k);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double bjk = b(j, k);
      if (bjk == 0.0) continue;
      double* cj = c.col(j);
      for (std::size_t i = 0; i < rows; ++i) cj[i] += bjk * ak[i];
    }
  }
  return c;
}

void add_in_place(Matrix& a, const Matrix& b, double scale) {
  require_same_shape(a, b, "add_in_place");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += scale * b.data()[i];
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols())
    throw ContractViolation("vstack: column counts differ, " + shape_of(top) +
                            " vs " + shape_of(bottom));
  Matrix c(top.rows() + bottom.rows(), top.cols());
  for (std::size_t j = 0; j < c.cols(); ++j) {
    double* cj = c.col(j);
    const double* tj = top.col(j);
    const double* bj = bottom.col(j);
    for (std::size_t i = 0; i < top.rows(); ++i) cj[i] = tj[i];
    for (std::size_t i = 0; i < bottom.rows(); ++i) cj[top.rows() + i] = bj[i];
  }
  return c;
}

Matrix top_rows(const Matrix& a, std::size_t count) {
  if (count == 0 || count > a.rows())
    throw ContractViolation("top_rows: invalid count " +
                            std::to_string(count) + " for " + shape_of(a));
  Matrix c(count, a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < count; ++i) c(i, j) = a(i, j);
  return c;
}

Matrix bottom_rows(const Matrix& a, std::size_t count) {
  if (count == 0 || count > a.rows())
    throw ContractViolation("bottom_rows: invalid count " +
                            std::to_string(count) + " for " + shape_of(a));
  const std::size_t offset = a.rows() - count;
  Matrix c(count, a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < count; ++i) c(i, j) = a(offset + i, j);
  return c;
}

Matrix select_columns(const Matrix& a, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ContractViolation("select_columns: empty selection");
  Matrix c(a.rows(), idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= a.cols())
      throw ContractViolation("select_columns: index " +
                              std::to_string(idx[j]) + " out of range for " +
                              shape_of(a));
    const double* src = a.col(idx[j]);
    double* dst = c.col(j);
    for (std::size_t i = 0; i < a.rows(); ++i) dst[i] = src[i];
  }
  return c;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
  return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::fabs(a.data()[i]));
  return best;
}

double trace(const Matrix& a) {
  double acc = 0.0;
  const std::size_t n = std::min(a.rows(), a.cols());
  for (std::size_t i = 0; i < n; ++i) acc += a(i, i);
  return acc;
}

bool all_finite(const Matrix& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a.data()[i])) return false;
  return true;
}

bool exactly_equal(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::fabs(a.data()[i] - b.data()[i]));
  return best;
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols())
    throw ContractViolation("solve_linear: matrix not square, " + shape_of(a));
  if (a.rows() != b.rows())
    throw ContractViolation("solve_linear: rhs rows differ, " + shape_of(a) +
                            " vs " + shape_of(b));
  const std::size_t n = a.rows();
  Matrix lu = a;
  Matrix x = b;
  std::vector<std::size_t> pivot(n);
  for (std::size_t i = 0; i < n; ++i) pivot[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_abs = std::fabs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::fabs(lu(i, k));
      if (v > best_abs) {
        best_abs = v;
        best = i;
      }
    }
    if (best_abs == 0.0)
      throw NumericalFailure("solve_linear: singular system, zero pivot at " +
                             std::to_string(k));
    if (best != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(best, j));
      for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(best, j));
    }
    const double inv_pivot = 1.0 / lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double factor = lu(i, k) * inv_pivot;
      lu(i, k) = factor;
      if (factor == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= factor * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= factor * x(k, j);
    }
  }
  // Back substitution per right-hand side.
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t ri = n; ri-- > 0;) {
      double acc = x(ri, j);
      for (std::size_t kk = ri + 1; kk < n; ++kk)
        acc -= lu(ri, kk) * x(kk, j);
      x(ri, j) = acc / lu(ri, ri);
    }
  }
  return x;
}

double stable_softplus(double x) {
  if (x > 30.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace divafn
