#include "divafn/objective.hpp"

#include <cmath>

namespace divafn {

namespace {

void require_weight(const Matrix& w, const char* name) {
  if (w.empty())
    throw ContractViolation(std::string("gradient: autoencoder weight ") +
                            name + " required but not provided");
}

std::vector<double> column_of(const Matrix& m, std::size_t j) {
  std::vector<double> out(m.rows());
  const double* src = m.col(j);
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = src[i];
  return out;
}

/// sigma(theta) - M restricted to `rows` of M: entry (r, j) uses
/// M(rows[r], j) against theta(r, j).
Matrix score_gap_rows(const Matrix& theta, const Matrix& m,
                      const std::vector<std::size_t>& rows) {
  if (m.cols() != theta.cols())
    throw ContractViolation(
        "gradient: similarity columns do not match the opposing sample "
        "count");
  Matrix gap(theta.rows(), theta.cols());
  for (std::size_t j = 0; j < theta.cols(); ++j)
    for (std::size_t r = 0; r < theta.rows(); ++r)
      gap(r, j) = sigmoid(theta(r, j)) - m(rows[r], j);
  return gap;
}

/// Same with `cols` selecting columns of M: entry (i, r) uses
/// M(i, cols[r]).
Matrix score_gap_cols(const Matrix& theta, const Matrix& m,
                      const std::vector<std::size_t>& cols) {
  if (m.rows() != theta.rows())
    throw ContractViolation(
        "gradient: similarity rows do not match the opposing sample count");
  Matrix gap(theta.rows(), theta.cols());
  for (std::size_t r = 0; r < theta.cols(); ++r)
    for (std::size_t i = 0; i < theta.rows(); ++i)
      gap(i, r) = sigmoid(theta(i, r)) - m(i, cols[r]);
  return gap;
}

/// 2*beta*(R - Wᵀ·S) + 2*lambda*Wᵀ·(W·R - S) for the batch columns.
Matrix sae_gradient(const Matrix& r_batch, const Matrix& w,
                    const Matrix& s_batch, double beta, double lambda) {
  Matrix grad(r_batch.rows(), r_batch.cols());
  if (beta > 0.0) {
    Matrix decoder_residual = r_batch - multiply_at_b(w, s_batch);
    add_in_place(grad, decoder_residual, 2.0 * beta);
  }
  if (lambda > 0.0) {
    Matrix encoder_residual = w * r_batch - s_batch;
    add_in_place(grad, multiply_at_b(w, encoder_residual), 2.0 * lambda);
  }
  return grad;
}

void check_cols(const std::vector<std::size_t>& cols, const Matrix& batch,
                std::size_t n) {
  if (cols.empty()) throw ContractViolation("gradient: empty column batch");
  if (batch.cols() != cols.size())
    throw ContractViolation("gradient: batch has " +
                            std::to_string(batch.cols()) +
                            " columns for " + std::to_string(cols.size()) +
                            " indices");
  for (std::size_t c : cols)
    if (c >= n)
      throw ContractViolation("gradient: sample index " + std::to_string(c) +
                              " out of range for n=" + std::to_string(n));
}

}  // namespace

void Hyperparams::validate() const {
  const double weights[5] = {a, b, c, beta, lambda};
  for (double w : weights)
    if (!(std::isfinite(w) && w >= 0.0))
      throw ContractViolation("hyperparams: weights must be finite and >= 0");
  if (!(std::isfinite(lr) && lr >= 0.0))
    throw ContractViolation("hyperparams: lr must be finite and >= 0");
  if (d == 0) throw ContractViolation("hyperparams: d must be positive");
  if (batch == 0)
    throw ContractViolation("hyperparams: batch must be positive");
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PairScores pair_scores(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw ContractViolation("pair_scores: representation dims differ, " +
                            std::to_string(a.rows()) + " vs " +
                            std::to_string(b.rows()));
  return PairScores{0.5 * multiply_at_b(a, b)};
}

double nll_pair_loss(const PairScores& scores, const SimilarityMatrix& m,
                     double weight) {
  if (!scores.theta.same_shape(m.entries))
    throw ContractViolation("nll_pair_loss: score/similarity shape mismatch");
  double loss = 0.0;
  const double* theta = scores.theta.data();
  const double* sim = m.entries.data();
  for (std::size_t i = 0; i < scores.theta.size(); ++i)
    loss += stable_softplus(theta[i]) - sim[i] * theta[i];
  return weight * loss;
}

double sae_penalty(const Matrix& r, const Matrix& w, const Matrix& s,
                   double beta, double lambda) {
  if (w.rows() != s.rows() || w.cols() != r.rows() || r.cols() != s.cols())
    throw ContractViolation("sae_penalty: shapes do not conform");
  double penalty = 0.0;
  if (beta != 0.0) {
    const double norm = frobenius_norm(r - multiply_at_b(w, s));
    penalty += beta * norm * norm;
  }
  if (lambda != 0.0) {
    const double norm = frobenius_norm(w * r - s);
    penalty += lambda * norm * norm;
  }
  return penalty;
}

ObjectiveParts objective_parts(const Matrix& f, const Matrix& h,
                               const Matrix& g, const Matrix& e,
                               const SimilarityMatrix& m1,
                               const SimilarityMatrix& m2,
                               const SimilarityMatrix& m3, const Matrix& s,
                               const SaeWeights& sae, const Hyperparams& hp,
                               bool include_e_penalty) {
  if (!exactly_equal(e, vstack(h, g)))
    throw ContractViolation(
        "total_objective: E is not the stacked [H; G] matrix");
  ObjectiveParts parts;
  parts.similarity = nll_pair_loss(pair_scores(f, g), m1, hp.a) +
                     nll_pair_loss(pair_scores(f, h), m2, hp.b) +
                     nll_pair_loss(pair_scores(h, g), m3, hp.c);
  if (hp.autoencoders_enabled()) {
    parts.sae_f = sae_penalty(f, sae.w_f, s, hp.beta, hp.lambda);
    parts.sae_h = sae_penalty(h, sae.w_h, s, hp.beta, hp.lambda);
    parts.sae_g = sae_penalty(g, sae.w_g, s, hp.beta, hp.lambda);
    if (include_e_penalty)
      parts.sae_e = sae_penalty(e, sae.w_e, s, hp.beta, hp.lambda);
  }
  return parts;
}

double total_objective(const Matrix& f, const Matrix& h, const Matrix& g,
                       const Matrix& e, const SimilarityMatrix& m1,
                       const SimilarityMatrix& m2, const SimilarityMatrix& m3,
                       const Matrix& s, const SaeWeights& sae,
                       const Hyperparams& hp, bool include_e_penalty) {
  return objective_parts(f, h, g, e, m1, m2, m3, s, sae, hp,
                         include_e_penalty)
      .total();
}

Matrix grad_f_columns(const std::vector<std::size_t>& cols,
                      const Matrix& f_batch, const Matrix& h_full,
                      const Matrix& g_full, const SimilarityMatrix& m1,
                      const SimilarityMatrix& m2, const Matrix& w_f,
                      const Matrix& s_full, const Hyperparams& hp) {
  if (m1.entries.rows() != m2.entries.rows())
    throw ContractViolation("grad_f: similarity image counts disagree");
  check_cols(cols, f_batch, m1.entries.rows());
  Matrix grad(f_batch.rows(), f_batch.cols());

  // (a/2) sum_k (sigma(theta1_ik) - M1_ik) G_{*k}
  Matrix theta1 = 0.5 * multiply_at_b(f_batch, g_full);
  Matrix gap1 = score_gap_rows(theta1, m1.entries, cols);
  add_in_place(grad, multiply_a_bt(g_full, gap1), 0.5 * hp.a);

  // (b/2) sum_j (sigma(theta2_ij) - M2_ij) H_{*j}
  Matrix theta2 = 0.5 * multiply_at_b(f_batch, h_full);
  Matrix gap2 = score_gap_rows(theta2, m2.entries, cols);
  add_in_place(grad, multiply_a_bt(h_full, gap2), 0.5 * hp.b);

  if (hp.autoencoders_enabled()) {
    require_weight(w_f, "W_F");
    const Matrix s_batch = select_columns(s_full, cols);
    add_in_place(grad, sae_gradient(f_batch, w_f, s_batch, hp.beta, hp.lambda));
  }
  return grad;
}

Matrix grad_h_columns(const std::vector<std::size_t>& cols,
                      const Matrix& h_batch, const Matrix& f_full,
                      const Matrix& g_full, const SimilarityMatrix& m2,
                      const SimilarityMatrix& m3, const Matrix& w_h,
                      const Matrix& w_e, const Matrix& s_full,
                      const Hyperparams& hp, GradientMode mode) {
  if (m2.entries.cols() != m3.entries.rows())
    throw ContractViolation("grad_h: similarity keyframe counts disagree");
  check_cols(cols, h_batch, m3.entries.rows());
  Matrix grad(h_batch.rows(), h_batch.cols());

  // (b/2) sum_i (sigma(theta2_ij) - M2_ij) F_{*i}
  Matrix theta2 = 0.5 * multiply_at_b(f_full, h_batch);
  Matrix gap2 = score_gap_cols(theta2, m2.entries, cols);
  add_in_place(grad, f_full * gap2, 0.5 * hp.b);

  // (c/2) sum_k (sigma(theta3_jk) - M3_jk) G_{*k}
  Matrix theta3 = 0.5 * multiply_at_b(h_batch, g_full);
  Matrix gap3 = score_gap_rows(theta3, m3.entries, cols);
  add_in_place(grad, multiply_a_bt(g_full, gap3), 0.5 * hp.c);

  if (hp.autoencoders_enabled()) {
    require_weight(w_h, "W_H");
    const Matrix s_batch = select_columns(s_full, cols);
    add_in_place(grad, sae_gradient(h_batch, w_h, s_batch, hp.beta, hp.lambda));
    if (mode == GradientMode::Default) {
      // E = [H; G]: the stacked-autoencoder penalty contributes the top d
      // rows of its gradient to H.
      require_weight(w_e, "W_E");
      const Matrix e_batch = vstack(h_batch, select_columns(g_full, cols));
      const Matrix e_grad =
          sae_gradient(e_batch, w_e, s_batch, hp.beta, hp.lambda);
      add_in_place(grad, top_rows(e_grad, h_batch.rows()));
    }
  }
  return grad;
}

Matrix grad_g_columns(const std::vector<std::size_t>& cols,
                      const Matrix& g_batch, const Matrix& f_full,
                      const Matrix& h_full, const SimilarityMatrix& m1,
                      const SimilarityMatrix& m3, const Matrix& w_g,
                      const Matrix& w_e, const Matrix& s_full,
                      const Hyperparams& hp, GradientMode mode) {
  if (m1.entries.cols() != m3.entries.cols())
    throw ContractViolation("grad_g: similarity video counts disagree");
  check_cols(cols, g_batch, m1.entries.cols());
  Matrix grad(g_batch.rows(), g_batch.cols());

  // (a/2) sum_i (sigma(theta1_ik) - M1_ik) F_{*i}
  Matrix theta1 = 0.5 * multiply_at_b(f_full, g_batch);
  Matrix gap1 = score_gap_cols(theta1, m1.entries, cols);
  add_in_place(grad, f_full * gap1, 0.5 * hp.a);

  // (c/2) sum_j (sigma(theta3_jk) - M3_jk) H_{*j}
  Matrix theta3 = 0.5 * multiply_at_b(h_full, g_batch);
  Matrix gap3 = score_gap_cols(theta3, m3.entries, cols);
  add_in_place(grad, h_full * gap3, 0.5 * hp.c);

  if (hp.autoencoders_enabled()) {
    require_weight(w_g, "W_G");
    const Matrix s_batch = select_columns(s_full, cols);
    add_in_place(grad, sae_gradient(g_batch, w_g, s_batch, hp.beta, hp.lambda));
    if (mode == GradientMode::Default) {
      require_weight(w_e, "W_E");
      const Matrix e_batch = vstack(select_columns(h_full, cols), g_batch);
      const Matrix e_grad =
          sae_gradient(e_batch, w_e, s_batch, hp.beta, hp.lambda);
      add_in_place(grad, bottom_rows(e_grad, g_batch.rows()));
    }
  }
  return grad;
}

std::vector<double> grad_f(std::size_t i, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m1,
                           const SimilarityMatrix& m2, const Matrix& w_f,
                           const Matrix& s, const Hyperparams& hp) {
  if (i >= f.cols())
    throw ContractViolation("grad_f: sample index out of range");
  const std::vector<std::size_t> cols{i};
  return column_of(grad_f_columns(cols, select_columns(f, cols), h, g, m1, m2,
                                  w_f, s, hp),
                   0);
}

std::vector<double> grad_h(std::size_t j, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m2,
                           const SimilarityMatrix& m3, const Matrix& w_h,
                           const Matrix& w_e, const Matrix& s,
                           const Hyperparams& hp, GradientMode mode) {
  if (j >= h.cols())
    throw ContractViolation("grad_h: sample index out of range");
  const std::vector<std::size_t> cols{j};
  return column_of(grad_h_columns(cols, select_columns(h, cols), f, g, m2, m3,
                                  w_h, w_e, s, hp, mode),
                   0);
}

std::vector<double> grad_g(std::size_t k, const Matrix& f, const Matrix& h,
                           const Matrix& g, const SimilarityMatrix& m1,
                           const SimilarityMatrix& m3, const Matrix& w_g,
                           const Matrix& w_e, const Matrix& s,
                           const Hyperparams& hp, GradientMode mode) {
  if (k >= g.cols())
    throw ContractViolation("grad_g: sample index out of range");
  const std::vector<std::size_t> cols{k};
  return column_of(grad_g_columns(cols, select_columns(g, cols), f, h, m1, m3,
                                  w_g, w_e, s, hp, mode),
                   0);
}

}  // namespace divafn
