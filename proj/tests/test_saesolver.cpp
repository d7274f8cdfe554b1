#include <cmath>

#include "doctest.h"

#include "divafn/objective.hpp"
#include "divafn/rng.hpp"
#include "divafn/saesolver.hpp"

using namespace divafn;

namespace {

/// Stationarity residual of the normal equation
/// beta S Sᵀ W + lambda W R Rᵀ - (beta+lambda) S Rᵀ.
double normal_equation_residual(const Matrix& w, const Matrix& r,
                                const Matrix& s, double beta, double lambda) {
  const Matrix lhs = beta * (multiply_a_bt(s, s) * w) +
                     lambda * (w * multiply_a_bt(r, r));
  const Matrix rhs = (beta + lambda) * multiply_a_bt(s, r);
  return frobenius_norm(lhs - rhs) / (1.0 + frobenius_norm(rhs));
}

}  // namespace

TEST_CASE("solve_w: identity fixed point for S = R") {
  Rng rng(51);
  const Matrix s = Matrix::gaussian(4, 16, rng);
  const Matrix w = solve_w(s, s, 1.0, 1.0);
  // S Sᵀ W + W S Sᵀ = 2 S Sᵀ has the unique solution W = I for full-rank S.
  CHECK(max_abs_diff(w, Matrix::identity(4)) < 1e-7);
}

TEST_CASE("solve_w: lambda = 0 reduces to the decoder least-squares limit") {
  Rng rng(52);
  const Matrix s = Matrix::gaussian(3, 12, rng);
  const Matrix r = Matrix::gaussian(5, 12, rng);
  const double beta = 0.7;
  const Matrix w = solve_w(r, s, beta, 0.0);
  const Matrix expected =
      solve_linear(multiply_a_bt(s, s), multiply_a_bt(s, r));
  CHECK(max_abs_diff(w, expected) < 1e-8);
}

TEST_CASE("solve_w: first-order stationarity on a seeded instance") {
  Rng rng(53);
  const Matrix s = Matrix::gaussian(4, 32, rng);
  const Matrix r = Matrix::gaussian(6, 32, rng);
  const Matrix w = solve_w(r, s, 0.1, 0.01);
  CHECK(normal_equation_residual(w, r, s, 0.1, 0.01) <= 1e-6);
}

TEST_CASE("solve_w: minimizes the penalty over random perturbations") {
  Rng rng(54);
  const Matrix s = Matrix::gaussian(4, 24, rng);
  const Matrix r = Matrix::gaussian(6, 24, rng);
  const double beta = 0.1, lambda = 0.01;
  const Matrix w = solve_w(r, s, beta, lambda);
  const double optimum = sae_penalty(r, w, s, beta, lambda);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix perturbed = w;
    const Matrix delta = Matrix::gaussian(w.rows(), w.cols(), rng);
    add_in_place(perturbed, delta, 0.01);
    CHECK(sae_penalty(r, perturbed, s, beta, lambda) >= optimum - 1e-9);
  }
}

TEST_CASE("solve_w: invariant to simultaneous column permutation") {
  Rng rng(55);
  const std::size_t n = 10;
  const Matrix s = Matrix::gaussian(3, n, rng);
  const Matrix r = Matrix::gaussian(5, n, rng);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 3 + 1) % n;
  const Matrix w = solve_w(r, s, 0.3, 0.2);
  const Matrix w_perm =
      solve_w(select_columns(r, perm), select_columns(s, perm), 0.3, 0.2);
  CHECK(max_abs_diff(w, w_perm) < 1e-9);
}

TEST_CASE("solve_w: degenerate cases") {
  SUBCASE("zero representations with full-rank S give W = 0") {
    Rng rng(56);
    const Matrix s = Matrix::gaussian(3, 8, rng);
    const Matrix w = solve_w(Matrix(5, 8), s, 1.0, 0.5);
    CHECK(max_abs(w) < 1e-10);
  }

  SUBCASE("shared rank deficiency is consistent and solvable") {
    // S and R each have one informative row; the Sylvester operator is
    // singular but the right-hand side stays in range, so the minimum-norm
    // completion satisfies the residual contract without the ridge.
    Matrix s(2, 3), r(2, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      s(0, j) = static_cast<double>(j + 1);
      r(0, j) = static_cast<double>(2 * j + 1);
    }
    SolveStats stats;
    const Matrix w = solve_w(r, s, 1.0, 1.0, &stats);
    CHECK(stats.ridge_activations == 0);
    CHECK(normal_equation_residual(w, r, s, 1.0, 1.0) <= 1e-6);
  }

  SUBCASE("both weights zero is rejected") {
    CHECK_THROWS_AS(solve_w(Matrix(2, 3, 1.0), Matrix(2, 3, 1.0), 0.0, 0.0),
                    ContractViolation);
  }

  SUBCASE("overflowing inputs activate the ridge retry and still fail") {
    Matrix s(2, 2, 1e160);
    Matrix r(2, 2, 1e160);
    SolveStats stats;
    CHECK_THROWS_AS(solve_w(r, s, 1.0, 1.0, &stats), NumericalFailure);
    CHECK(stats.ridge_activations == 1);
  }
}

TEST_CASE("update_all: shapes, zero case, and per-block optimality") {
  Rng rng(57);
  const std::size_t d = 6, k = 4, n = 32;
  const Matrix f = Matrix::gaussian(d, n, rng);
  const Matrix h = Matrix::gaussian(d, n, rng);
  const Matrix g = Matrix::gaussian(d, n, rng);
  const Matrix s = Matrix::gaussian(k, n, rng);
  const double beta = 0.1, lambda = 0.01;

  SolveStats stats;
  const SaeWeights weights = update_all(f, h, g, s, beta, lambda, &stats);
  CHECK(weights.w_f.rows() == k);
  CHECK(weights.w_f.cols() == d);
  CHECK(weights.w_e.rows() == k);
  CHECK(weights.w_e.cols() == 2 * d);
  CHECK(stats.ridge_activations == 0);

  const Matrix e = vstack(h, g);
  const struct {
    const Matrix* rep;
    const Matrix* w;
  } blocks[4] = {{&f, &weights.w_f},
                 {&h, &weights.w_h},
                 {&g, &weights.w_g},
                 {&e, &weights.w_e}};
  for (const auto& block : blocks) {
    const double optimum =
        sae_penalty(*block.rep, *block.w, s, beta, lambda);
    for (int trial = 0; trial < 5; ++trial) {
      Matrix perturbed = *block.w;
      const Matrix delta =
          Matrix::gaussian(perturbed.rows(), perturbed.cols(), rng);
      add_in_place(perturbed, delta, 0.01);
      CHECK(sae_penalty(*block.rep, perturbed, s, beta, lambda) >=
            optimum - 1e-9);
    }
  }
}

TEST_CASE("update_all is independent of the DVFN_THREADS budget") {
  Rng rng(58);
  const Matrix f = Matrix::gaussian(5, 20, rng);
  const Matrix h = Matrix::gaussian(5, 20, rng);
  const Matrix g = Matrix::gaussian(5, 20, rng);
  const Matrix s = Matrix::gaussian(3, 20, rng);
  setenv("DVFN_THREADS", "1", 1);
  const SaeWeights serial = update_all(f, h, g, s, 0.1, 0.01);
  setenv("DVFN_THREADS", "4", 1);
  const SaeWeights threaded = update_all(f, h, g, s, 0.1, 0.01);
  unsetenv("DVFN_THREADS");
  CHECK(exactly_equal(serial.w_f, threaded.w_f));
  CHECK(exactly_equal(serial.w_h, threaded.w_h));
  CHECK(exactly_equal(serial.w_g, threaded.w_g));
  CHECK(exactly_equal(serial.w_e, threaded.w_e));
}
