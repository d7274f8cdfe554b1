#ifndef DIVAFN_OBJECTIVE_HPP
#define DIVAFN_OBJECTIVE_HPP

#include <cstdint>
#include <vector>

#include "divafn/datamodel.hpp"
#include "divafn/matrix.hpp"
#include "divafn/saesolver.hpp"

namespace divafn {

struct Hyperparams {
  double a = 0.1;
  double b = 0.1;
  double c = 1.0;
  double beta = 0.1;
  double lambda = 0.01;
  std::size_t d = 64;     // representation dimension
  double lr = 1e-4;
  std::size_t batch = 64;
  std::size_t iters = 100;

  bool autoencoders_enabled() const { return beta > 0.0 || lambda > 0.0; }
  void validate() const;
};

/// Gradient flavor for the keyframe/video representations: Default carries
/// the stacked-autoencoder terms (E depends on H and G), StrictPaper drops
/// them and matches the printed per-modality gradients.
enum class GradientMode { Default, StrictPaper };

/// Pairwise scores for one modality pair: theta = (1/2) AᵀB.
struct PairScores {
  Matrix theta;
};

PairScores pair_scores(const Matrix& a, const Matrix& b);

/// Numerically symmetric logistic function.
double sigmoid(double x);

/// weight * sum_ij [softplus(theta_ij) - M_ij * theta_ij].
double nll_pair_loss(const PairScores& scores, const SimilarityMatrix& m,
                     double weight);

/// beta * ||R - Wᵀ·S||_F² + lambda * ||W·R - S||_F².
double sae_penalty(const Matrix& r, const Matrix& w, const Matrix& s,
                   double beta, double lambda);

/// The summands of the training objective, kept separate so callers that
/// re-solve one autoencoder can refresh a single term.
struct ObjectiveParts {
  double similarity = 0.0;  // a-, b-, c-weighted pairwise losses
  double sae_f = 0.0;
  double sae_h = 0.0;
  double sae_g = 0.0;
  double sae_e = 0.0;
  double total() const { return similarity + sae_f + sae_h + sae_g + sae_e; }
};

/// include_e_penalty = false evaluates the objective the strict-paper
/// gradients minimize (no stacked-autoencoder penalty).
ObjectiveParts objective_parts(const Matrix& f, const Matrix& h,
                               const Matrix& g, const Matrix& e,
                               const SimilarityMatrix& m1,
                               const SimilarityMatrix& m2,
                               const SimilarityMatrix& m3, const Matrix& s,
                               const SaeWeights& sae, const Hyperparams& hp,
                               bool include_e_penalty = true);

double total_objective(const Matrix& f, const Matrix& h, const Matrix& g,
                       const Matrix& e, const SimilarityMatrix& m1,
                       const SimilarityMatrix& m2, const SimilarityMatrix& m3,
                       const Matrix& s, const SaeWeights& sae,
                       const Hyperparams& hp, bool include_e_penalty = true);

// Batched objective gradients with respect to representation columns.
// `cols` selects sample indices; the matching `*_batch` matrix holds the
// current representations of exactly those columns, while the other two
// modalities pass their full cached matrices (the pairwise sums range over
// every sample). Results are d x |cols|.

Matrix grad_f_columns(const std::vector<std::size_t>& cols,
                      const Matrix& f_batch, const Matrix& h_full,
                      const Matrix& g_full, const SimilarityMatrix& m1,
                      const SimilarityMatrix& m2, const Matrix& w_f,
                      const Matrix& s_full, const Hyperparams& hp);

Matrix grad_h_columns(const std::vector<std::size_t>& cols,
                      const Matrix& h_batch, const Matrix& f_full,
                      const Matrix& g_full, const SimilarityMatrix& m2,
                      const SimilarityMatrix& m3, const Matrix& w_h,
                      const Matrix& w_e, const Matrix& s_full,
                      const Hyperparams& hp, GradientMode mode);

Matrix grad_g_columns(const std::vector<std::size_t>& cols,
                      const Matrix& g_batch, const Matrix& f_full,
                      const Matrix& h_full, const SimilarityMatrix& m1,
                      const SimilarityMatrix& m3, const Matrix& w_g,
                      const Matrix& w_e, const Matrix& s_full,
                      const Hyperparams& hp, GradientMode mode);

// Per-column gradients, as the update rules are written.

std::vector<double> grad_f(std::size_t i, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m1,
                           const SimilarityMatrix& m2, const Matrix& w_f,
                           const Matrix& s, const Hyperparams& hp);

std::vector<double> grad_h(std::size_t j, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m2,
                           const SimilarityMatrix& m3, const Matrix& w_h,
                           const Matrix& w_e, const Matrix& s,
                           const Hyperparams& hp, GradientMode mode);

std::vector<double> grad_g(std::size_t k, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m1,
                           const SimilarityMatrix& m3, const Matrix& w_g,
                           const Matrix& w_e, const Matrix& s,
                           const Hyperparams& hp, GradientMode mode);

}  // namespace divafn

#endif  // DIVAFN_OBJECTIVE_HPP
