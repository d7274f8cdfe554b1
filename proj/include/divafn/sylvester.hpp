#ifndef DIVAFN_SYLVESTER_HPP
#define DIVAFN_SYLVESTER_HPP

#include <vector>

#include "divafn/matrix.hpp"

namespace divafn {

/// Solves A·W + W·B = C for W (A is k×k, B is m×m, C is k×m).
///
/// Requires the spectra of A and -B to be disjoint. When A and B are both
/// symmetric (the case every caller in this library produces: Gram matrices),
/// the solve diagonalizes both sides and divides by eigenvalue sums; general
/// inputs fall back to the dense Kronecker formulation. The result is
/// validated against the residual contract
///   ||A·W + W·B - C||_F <= 1e-8 * max(1, ||C||_F)
/// and a NumericalFailure naming the residual is raised when it is missed.
Matrix solve_sylvester(const Matrix& a, const Matrix& b, const Matrix& c);

/// Independent reference solver: assembles (I ⊗ A + Bᵀ ⊗ I)·vec(W) = vec(C)
/// and solves it densely by LU. Limited to k·m <= 4096 unknowns.
Matrix sylvester_oracle(const Matrix& a, const Matrix& b, const Matrix& c);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations:
/// a = V · diag(values) · Vᵀ. Exposed for tests.
void symmetric_eigen(const Matrix& a, std::vector<double>& values, Matrix& v);

/// Relative residual ||A·W + W·B - C||_F / max(1, ||C||_F).
double sylvester_residual(const Matrix& a, const Matrix& b, const Matrix& c,
                          const Matrix& w);

}  // namespace divafn

#endif  // DIVAFN_SYLVESTER_HPP
