#include "divafn/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "divafn/rng.hpp"

namespace divafn {

namespace {

constexpr double kStep = 1e-5;
constexpr double kRelTolerance = 1e-4;

double relative_error(double analytic, double numeric) {
  const double denom =
      std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / denom;
}

struct Instance {
  Matrix f, h, g;
  SimilarityMatrix sim;
  Matrix semantics;
  SaeWeights sae;
};

Instance make_instance(std::uint64_t seed) {
  constexpr std::size_t n = 8, d = 6, k = 4, classes = 3;
  Rng rng(Rng::stream(seed, 7));
  Instance inst;
  inst.f = Matrix::gaussian(d, n, rng);
  inst.h = Matrix::gaussian(d, n, rng);
  inst.g = Matrix::gaussian(d, n, rng);

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = static_cast<int>(i % classes);
  inst.sim = build_similarity(labels, labels);

  Matrix table = Matrix::gaussian(k, classes, rng);
  for (std::size_t j = 0; j < classes; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) norm += table(i, j) * table(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < k; ++i) table(i, j) /= norm;
  }
  inst.semantics = expand_semantics(SemanticTable{table, true}, labels);

  inst.sae.w_f = Matrix::gaussian(k, d, rng);
  inst.sae.w_h = Matrix::gaussian(k, d, rng);
  inst.sae.w_g = Matrix::gaussian(k, d, rng);
  inst.sae.w_e = Matrix::gaussian(k, 2 * d, rng);
  return inst;
}

/// One representation check: `analytic` is the full d x n gradient matrix,
/// `objective_at` evaluates the matching objective for a perturbed copy of
/// the representation.
GradCheckEntry check_matrix(
    const std::string& name, const Matrix& reference, const Matrix& analytic,
    const std::function<double(const Matrix&)>& objective_at) {
  GradCheckEntry entry;
  entry.name = name;
  for (std::size_t j = 0; j < reference.cols(); ++j) {
    for (std::size_t i = 0; i < reference.rows(); ++i) {
      Matrix perturbed = reference;
      perturbed(i, j) = reference(i, j) + kStep;
      const double plus = objective_at(perturbed);
      perturbed(i, j) = reference(i, j) - kStep;
      const double minus = objective_at(perturbed);
      const double numeric = (plus - minus) / (2.0 * kStep);
      const double rel = relative_error(analytic(i, j), numeric);
      if (rel > entry.worst_rel_error) {
        entry.worst_rel_error = rel;
        entry.worst_coordinate = name + "[" + std::to_string(i) + "," +
                                 std::to_string(j) + "]";
      }
    }
  }
  entry.pass = entry.worst_rel_error <= kRelTolerance;
  return entry;
}

}  // namespace

GradCheckResult run_gradcheck(const Hyperparams& hp, std::uint64_t seed,
                              double corruption) {
  Hyperparams local = hp;
  local.validate();
  Instance inst = make_instance(seed);
  if (!local.autoencoders_enabled()) inst.sae = SaeWeights{};

  const std::vector<std::size_t> all_cols = [&] {
    std::vector<std::size_t> cols(inst.f.cols());
    for (std::size_t i = 0; i < cols.size(); ++i) cols[i] = i;
    return cols;
  }();

  GradCheckResult result;
  const bool modes[2] = {false, true};  // strict-paper flag
  for (bool strict : modes) {
    const GradientMode mode =
        strict ? GradientMode::StrictPaper : GradientMode::Default;
    const bool with_e = !strict;
    const std::string suffix = strict ? "/strict_paper" : "/default";

    const auto objective_with = [&](const Matrix& f, const Matrix& h,
                                    const Matrix& g) {
      return total_objective(f, h, g, vstack(h, g), inst.sim, inst.sim,
                             inst.sim, inst.semantics, inst.sae, local,
                             with_e);
    };

    Matrix analytic_f =
        grad_f_columns(all_cols, inst.f, inst.h, inst.g, inst.sim, inst.sim,
                       inst.sae.w_f, inst.semantics, local);
    if (corruption != 0.0) analytic_f(0, 0) += corruption;
    result.entries.push_back(check_matrix(
        "grad_f" + suffix, inst.f, analytic_f, [&](const Matrix& f) {
          return objective_with(f, inst.h, inst.g);
        }));

    const Matrix analytic_h =
        grad_h_columns(all_cols, inst.h, inst.f, inst.g, inst.sim, inst.sim,
                       inst.sae.w_h, inst.sae.w_e, inst.semantics, local,
                       mode);
    result.entries.push_back(check_matrix(
        "grad_h" + suffix, inst.h, analytic_h, [&](const Matrix& h) {
          return objective_with(inst.f, h, inst.g);
        }));

    const Matrix analytic_g =
        grad_g_columns(all_cols, inst.g, inst.f, inst.h, inst.sim, inst.sim,
                       inst.sae.w_g, inst.sae.w_e, inst.semantics, local,
                       mode);
    result.entries.push_back(check_matrix(
        "grad_g" + suffix, inst.g, analytic_g, [&](const Matrix& g) {
          return objective_with(inst.f, inst.h, g);
        }));
  }

  result.pass = true;
  for (const auto& entry : result.entries) {
    result.pass = result.pass && entry.pass;
    if (entry.worst_rel_error > result.worst_rel_error) {
      result.worst_rel_error = entry.worst_rel_error;
      result.worst_coordinate = entry.worst_coordinate;
    }
  }
  return result;
}

}  // namespace divafn
