#include "divafn/saesolver.hpp"

#include <atomic>

#include "divafn/parallel.hpp"
#include "divafn/sylvester.hpp"

namespace divafn {

Matrix solve_w(const Matrix& representations, const Matrix& semantics,
               double beta, double lambda, SolveStats* stats) {
  if (representations.empty() || semantics.empty())
    throw ContractViolation("solve_w: empty operand");
  if (representations.cols() != semantics.cols())
    throw ContractViolation("solve_w: sample counts differ, " +
                            std::to_string(representations.cols()) + " vs " +
                            std::to_string(semantics.cols()));
  if (beta < 0.0 || lambda < 0.0)
    throw ContractViolation("solve_w: negative weight");
  if (beta == 0.0 && lambda == 0.0)
    throw ContractViolation("solve_w: beta and lambda must not both be zero");

  const Matrix gram_semantics = beta * multiply_a_bt(semantics, semantics);
  const Matrix gram_reps =
      lambda * multiply_a_bt(representations, representations);
  const Matrix rhs =
      (beta + lambda) * multiply_a_bt(semantics, representations);

  try {
    return solve_sylvester(gram_semantics, gram_reps, rhs);
  } catch (const NumericalFailure&) {
    const double trace_scale =
        (trace(gram_semantics) + trace(gram_reps)) /
        static_cast<double>(gram_semantics.rows() + gram_reps.rows());
    const double ridge = 1e-10 * std::max(trace_scale, 1e-30);
    Matrix regularized = gram_semantics;
    for (std::size_t i = 0; i < regularized.rows(); ++i)
      regularized(i, i) += ridge;
    if (stats) ++stats->ridge_activations;
    return solve_sylvester(regularized, gram_reps, rhs);
  }
}

SaeWeights update_all(const Matrix& f, const Matrix& h, const Matrix& g,
                      const Matrix& semantics, double beta, double lambda,
                      SolveStats* stats) {
  if (f.cols() != h.cols() || h.cols() != g.cols() ||
      g.cols() != semantics.cols())
    throw ContractViolation("update_all: sample counts differ");
  const Matrix stacked = vstack(h, g);

  SaeWeights weights;
  Matrix* outputs[4] = {&weights.w_f, &weights.w_h, &weights.w_g,
                        &weights.w_e};
  const Matrix* inputs[4] = {&f, &h, &g, &stacked};
  std::atomic<int> ridge_count{0};

  run_tasks(4, [&](std::size_t task) {
    SolveStats local;
    *outputs[task] = solve_w(*inputs[task], semantics, beta, lambda, &local);
    ridge_count += local.ridge_activations;
  });

  if (stats) stats->ridge_activations += ridge_count.load();
  return weights;
}

}  // namespace divafn
