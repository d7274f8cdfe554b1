#include "divafn/sylvester.hpp"

#include <cmath>
#include <sstream>

namespace divafn {

namespace {

constexpr double kResidualTolerance = 1e-8;

void validate_shapes(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.empty() || b.empty() || c.empty())
    throw ContractViolation("sylvester: empty operand");
  if (a.rows() != a.cols())
    throw ContractViolation("sylvester: A not square (" +
                            std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ")");
  if (b.rows() != b.cols())
    throw ContractViolation("sylvester: B not square (" +
                            std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + ")");
  if (c.rows() != a.rows() || c.cols() != b.rows())
    throw ContractViolation(
        "sylvester: C must be " + std::to_string(a.rows()) + "x" +
        std::to_string(b.rows()) + ", got " + std::to_string(c.rows()) + "x" +
        std::to_string(c.cols()));
}

bool is_symmetric(const Matrix& m) {
  const double tol = 1e-12 * std::max(1.0, max_abs(m));
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = j + 1; i < m.rows(); ++i)
      if (std::fabs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

Matrix kronecker_solve(const Matrix& a, const Matrix& b, const Matrix& c) {
  const std::size_t k = a.rows();
  const std::size_t m = b.rows();
  const std::size_t unknowns = k * m;
  Matrix system(unknowns, unknowns);
  // vec(W) stacks columns of W; unknown index j*k + i holds W(i, j).
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t r = 0; r < k; ++r)
        system(j * k + r, j * k + i) += a(r, i);
    for (std::size_t l = 0; l < m; ++l) {
      const double blj = b(l, j);
      if (blj == 0.0) continue;
      for (std::size_t i = 0; i < k; ++i) system(j * k + i, l * k + i) += blj;
    }
  }
  Matrix rhs(unknowns, 1);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < k; ++i) rhs(j * k + i, 0) = c(i, j);

  Matrix vec_w = solve_linear(system, rhs);

  Matrix w(k, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < k; ++i) w(i, j) = vec_w(j * k + i, 0);
  return w;
}

void check_residual(const Matrix& a, const Matrix& b, const Matrix& c,
                    const Matrix& w, const char* who) {
  const double residual = frobenius_norm(a * w + w * b - c);
  const double tol = kResidualTolerance * std::max(1.0, frobenius_norm(c));
  if (!(residual <= tol)) {
    std::ostringstream msg;
    msg << who << ": residual " << residual << " exceeds tolerance " << tol
        << " (system singular or near-singular)";
    throw NumericalFailure(msg.str());
  }
}

}  // namespace

void symmetric_eigen(const Matrix& a, std::vector<double>& values, Matrix& v) {
  if (a.rows() != a.cols())
    throw ContractViolation("symmetric_eigen: matrix not square");
  const std::size_t n = a.rows();
  Matrix work = a;
  v = Matrix::identity(n);

  const double scale = std::max(1.0, max_abs(a));
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t p = 0; p < q; ++p) off += work(p, q) * work(p, q);
    if (std::sqrt(off) <= 1e-14 * scale * n) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = work(p, q);
        if (std::fabs(apq) <= 1e-300) {
          work(p, q) = work(q, p) = 0.0;
          continue;
        }
        const double theta = (work(q, q) - work(p, p)) / (2.0 * apq);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
        const double sin_r = t * cos_r;

        for (std::size_t i = 0; i < n; ++i) {
          const double wip = work(i, p);
          const double wiq = work(i, q);
          work(i, p) = cos_r * wip - sin_r * wiq;
          work(i, q) = sin_r * wip + cos_r * wiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double wpi = work(p, i);
          const double wqi = work(q, i);
          work(p, i) = cos_r * wpi - sin_r * wqi;
          work(q, i) = sin_r * wpi + cos_r * wqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = cos_r * vip - sin_r * viq;
          v(i, q) = sin_r * vip + cos_r * viq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = work(i, i);
}

Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c) {
  validate_shapes(a, b, c);
  Matrix w;
  if (is_symmetric(a) && is_symmetric(b)) {
    // A = Va·diag(wa)·Vaᵀ and B = Vb·diag(wb)·Vbᵀ turn the equation into
    // independent scalar problems: (VaᵀWVb)_ij * (wa_i + wb_j) = (VaᵀCVb)_ij.
    std::vector<double> eig_a, eig_b;
    Matrix va, vb;
    symmetric_eigen(a, eig_a, va);
    symmetric_eigen(b, eig_b, vb);

    double spread = 0.0;
    for (double e : eig_a) spread = std::max(spread, std::fabs(e));
    for (double e : eig_b) spread = std::max(spread, std::fabs(e));
    const double zero_denominator = 1e-13 * std::max(spread, 1e-300);

    Matrix ct = multiply_at_b(va, c * vb);
    Matrix wt(ct.rows(), ct.cols());
    for (std::size_t j = 0; j < wt.cols(); ++j)
      for (std::size_t i = 0; i < wt.rows(); ++i) {
        const double denom = eig_a[i] + eig_b[j];
        // Near-zero sums get the minimum-norm component; the residual check
        // below decides whether the system was actually consistent.
        wt(i, j) =
            std::fabs(denom) <= zero_denominator ? 0.0 : ct(i, j) / denom;
      }
    w = multiply_a_bt(va * wt, vb);
  } else {
    w = kronecker_solve(a, b, c);
  }
  check_residual(a, b, c, w, "solve_sylvester");
  return w;
}

Matrix sylvester_oracle(const Matrix& a, const Matrix& b, const Matrix& c) {
  validate_shapes(a, b, c);
  const std::size_t unknowns = a.rows() * b.rows();
  if (unknowns > 4096)
    throw ContractViolation("sylvester_oracle: " + std::to_string(unknowns) +
                            " unknowns exceed the 4096 dense-solve limit");
  Matrix w = kronecker_solve(a, b, c);
  check_residual(a, b, c, w, "sylvester_oracle");
  return w;
}

double sylvester_residual(const Matrix& a, const Matrix& b, const Matrix& c,
                          const Matrix& w) {
  return frobenius_norm(a * w + w * b - c) /
         std::max(1.0, frobenius_norm(c));
}

}  // namespace divafn
