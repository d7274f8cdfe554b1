#include <cmath>

#include "doctest.h"

#include "divafn/matrix.hpp"
#include "divafn/rng.hpp"
#include "divafn/sylvester.hpp"

using namespace divafn;

namespace {

Matrix random_psd(std::size_t n, double weight, std::size_t inner, Rng& rng) {
  const Matrix factor = Matrix::gaussian(n, inner, rng);
  return weight * multiply_a_bt(factor, factor);
}

}  // namespace

TEST_CASE("matrix basics") {
  Matrix m(2, 3);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 0.0);
  m(1, 2) = 4.5;
  CHECK(m(1, 2) == 4.5);

  CHECK_THROWS_AS(Matrix(0, 3), ContractViolation);
  CHECK_THROWS_AS(Matrix(3, 0), ContractViolation);

  const Matrix id = Matrix::identity(3);
  CHECK(exactly_equal(id * id, id));

  Rng rng(3);
  const Matrix a = Matrix::gaussian(4, 5, rng);
  const Matrix b = Matrix::gaussian(5, 3, rng);
  const Matrix c = a * b;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double expected = 0.0;
      for (std::size_t k = 0; k < 5; ++k) expected += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }

  CHECK(max_abs_diff(multiply_at_b(a, a), transpose(a) * a) < 1e-12);
  CHECK(max_abs_diff(multiply_a_bt(b, b), b * transpose(b)) < 1e-12);
  CHECK_THROWS_AS(a * a, ContractViolation);
}

TEST_CASE("stack and slice") {
  Rng rng(11);
  const Matrix top = Matrix::gaussian(2, 4, rng);
  const Matrix bottom = Matrix::gaussian(3, 4, rng);
  const Matrix stacked = vstack(top, bottom);
  CHECK(stacked.rows() == 5);
  CHECK(exactly_equal(top_rows(stacked, 2), top));
  CHECK(exactly_equal(bottom_rows(stacked, 3), bottom));

  const Matrix picked = select_columns(stacked, {3, 0});
  CHECK(picked.cols() == 2);
  CHECK(picked(0, 0) == stacked(0, 3));
  CHECK(picked(4, 1) == stacked(4, 0));
  CHECK_THROWS_AS(select_columns(stacked, {9}), ContractViolation);
}

TEST_CASE("solve_linear against known inverse") {
  Matrix a(2, 2);
  a(0, 0) = 4.0; a(0, 1) = 1.0;
  a(1, 0) = 2.0; a(1, 1) = 3.0;
  Matrix rhs(2, 1);
  rhs(0, 0) = 9.0;
  rhs(1, 0) = 13.0;
  const Matrix x = solve_linear(a, rhs);
  CHECK(x(0, 0) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(x(1, 0) == doctest::Approx(3.4).epsilon(1e-12));

  Matrix singular(2, 2);
  singular(0, 0) = 1.0; singular(0, 1) = 2.0;
  singular(1, 0) = 2.0; singular(1, 1) = 4.0;
  CHECK_THROWS_AS(solve_linear(singular, rhs), NumericalFailure);
}

TEST_CASE("stable_softplus values and bounds") {
  CHECK(stable_softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::fabs(stable_softplus(1000.0) - 1000.0) < 1e-12);
  CHECK(stable_softplus(-1000.0) >= 0.0);
  CHECK(stable_softplus(-1000.0) < 1e-300);

  // softplus(x) - max(0, x) stays within [0, log 2] and is monotone.
  double previous = stable_softplus(-40.0);
  for (double x = -40.0; x <= 40.0; x += 0.37) {
    const double value = stable_softplus(x);
    const double gap = value - std::max(0.0, x);
    CHECK(gap >= 0.0);
    CHECK(gap <= std::log(2.0) + 1e-15);
    CHECK(value >= previous);
    previous = value;
  }
}

TEST_CASE("symmetric eigendecomposition reconstructs") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.below(6));
    const Matrix a = random_psd(n, 1.0, n + 2, rng);
    std::vector<double> values;
    Matrix v;
    symmetric_eigen(a, values, v);
    Matrix reconstructed(n, n);
    for (std::size_t col = 0; col < n; ++col)
      for (std::size_t row = 0; row < n; ++row) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k)
          acc += v(row, k) * values[k] * v(col, k);
        reconstructed(row, col) = acc;
      }
    CHECK(max_abs_diff(reconstructed, a) < 1e-10 * std::max(1.0, max_abs(a)));
    CHECK(max_abs_diff(multiply_at_b(v, v), Matrix::identity(n)) < 1e-12);
  }
}

TEST_CASE("sylvester: scaled identity case forces W = C/(alpha+beta)") {
  Rng rng(42);
  const Matrix c = Matrix::gaussian(2, 2, rng);
  const Matrix a = 2.0 * Matrix::identity(2);
  const Matrix b = 3.0 * Matrix::identity(2);
  const Matrix w = solve_sylvester(a, b, c);
  CHECK(max_abs_diff(w, (1.0 / 5.0) * c) < 1e-12);
}

TEST_CASE("sylvester: zero A reduces to W B = C") {
  const Matrix a(2, 2);  // zeros
  const Matrix b = Matrix::identity(2);
  const Matrix c = Matrix::identity(2);
  const Matrix w = solve_sylvester(a, b, c);
  CHECK(max_abs_diff(w, Matrix::identity(2)) < 1e-12);
}

TEST_CASE("sylvester oracle scalar and diagonal cases") {
  Matrix a1(1, 1); a1(0, 0) = 1.0;
  Matrix b1(1, 1); b1(0, 0) = 1.0;
  Matrix c1(1, 1); c1(0, 0) = 4.0;
  CHECK(sylvester_oracle(a1, b1, c1)(0, 0) == doctest::Approx(2.0));

  Matrix a2(2, 2);
  a2(0, 0) = 1.0; a2(1, 1) = 2.0;
  Matrix b2(1, 1); b2(0, 0) = 3.0;
  Matrix c2(2, 1);
  c2(0, 0) = 4.0; c2(1, 0) = 5.0;
  const Matrix w = sylvester_oracle(a2, b2, c2);
  CHECK(w(0, 0) == doctest::Approx(1.0));
  CHECK(w(1, 0) == doctest::Approx(1.0));

  Matrix big_a(70, 70);
  for (std::size_t i = 0; i < 70; ++i) big_a(i, i) = 1.0;
  Matrix big_b(70, 70);
  for (std::size_t i = 0; i < 70; ++i) big_b(i, i) = 1.0;
  CHECK_THROWS_AS(sylvester_oracle(big_a, big_b, Matrix(70, 70, 1.0)),
                  ContractViolation);
}

TEST_CASE("sylvester solver agrees with the Kronecker oracle on PSD Gram "
          "instances") {
  // Fixed seed; A = beta * S Sᵀ (3x3), B = lambda * F Fᵀ (4x4).
  Rng rng(42);
  const Matrix a = random_psd(3, 0.1, 6, rng);
  const Matrix b = random_psd(4, 0.01, 6, rng);
  const Matrix c = Matrix::gaussian(3, 4, rng);
  const Matrix w = solve_sylvester(a, b, c);
  const Matrix w_ref = sylvester_oracle(a, b, c);
  CHECK(max_abs_diff(w, w_ref) < 1e-8);
  CHECK(sylvester_residual(a, b, c, w) <= 1e-8);

  for (int trial = 0; trial < 20; ++trial) {
    Rng trial_rng(static_cast<std::uint64_t>(100 + trial));
    const std::size_t k = 2 + static_cast<std::size_t>(trial_rng.below(7));
    const std::size_t d = 2 + static_cast<std::size_t>(trial_rng.below(15));
    const Matrix ta = random_psd(k, 0.1, k + 3, trial_rng);
    const Matrix tb = random_psd(d, 0.01, d + 3, trial_rng);
    const Matrix tc = Matrix::gaussian(k, d, trial_rng);
    const Matrix tw = solve_sylvester(ta, tb, tc);
    CHECK(max_abs_diff(tw, sylvester_oracle(ta, tb, tc)) < 1e-8);
    CHECK(sylvester_residual(ta, tb, tc, tw) <= 1e-8);
  }
}

TEST_CASE("sylvester rejects mismatched shapes and singular systems") {
  Rng rng(9);
  const Matrix a = random_psd(3, 1.0, 5, rng);
  const Matrix b = random_psd(4, 1.0, 6, rng);
  CHECK_THROWS_AS(solve_sylvester(a, b, Matrix(4, 3, 1.0)),
                  ContractViolation);
  CHECK_THROWS_AS(solve_sylvester(Matrix(3, 4, 1.0), b, Matrix(3, 4, 1.0)),
                  ContractViolation);

  // A = B = 0 with nonzero C has no solution; the residual contract names it.
  const Matrix zero3(3, 3);
  const Matrix zero4(4, 4);
  try {
    solve_sylvester(zero3, zero4, Matrix(3, 4, 1.0));
    FAIL("expected NumericalFailure");
  } catch (const NumericalFailure& failure) {
    CHECK(std::string(failure.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("rng determinism and gaussian moments") {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng rng(1234);
  double sum = 0.0, sum_sq = 0.0;
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / kDraws;
  const double variance = sum_sq / kDraws - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(variance - 1.0) < 0.05);
}
