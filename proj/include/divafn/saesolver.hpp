#ifndef DIVAFN_SAESOLVER_HPP
#define DIVAFN_SAESOLVER_HPP

#include "divafn/matrix.hpp"

namespace divafn {

/// The four semantic-autoencoder projections. w_f, w_h, w_g are k x d and
/// w_e is k x 2d (it acts on the stacked keyframe/video representation).
/// Empty matrices mean "not yet solved".
struct SaeWeights {
  Matrix w_f;
  Matrix w_h;
  Matrix w_g;
  Matrix w_e;

  bool solved() const {
    return !w_f.empty() && !w_h.empty() && !w_g.empty() && !w_e.empty();
  }
};

struct SolveStats {
  int ridge_activations = 0;
};

/// Closed-form minimizer of
///   beta * ||R - Wᵀ·S||_F² + lambda * ||W·R - S||_F²
/// over W, obtained from the stationarity condition
///   beta·S·Sᵀ·W + lambda·W·R·Rᵀ = (beta + lambda)·S·Rᵀ
/// solved as a Sylvester equation. When the plain solve fails (both Gram
/// matrices rank-deficient along a shared direction), a ridge of
/// 1e-10 * trace scale is added to the left Gram matrix and the solve is
/// retried once; `stats` counts those activations.
Matrix solve_w(const Matrix& representations, const Matrix& semantics,
               double beta, double lambda, SolveStats* stats = nullptr);

/// Solves all four autoencoders against the shared semantic matrix;
/// the stacked input E = [H; G] is formed internally.
SaeWeights update_all(const Matrix& f, const Matrix& h, const Matrix& g,
                      const Matrix& semantics, double beta, double lambda,
                      SolveStats* stats = nullptr);

}  // namespace divafn

#endif  // DIVAFN_SAESOLVER_HPP
