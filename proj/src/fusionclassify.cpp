#include "divafn/fusionclassify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "divafn/parallel.hpp"

namespace divafn {

FusedBatch fuse(const Model& model, const Matrix& keyframes,
                const Matrix& videos) {
  if (keyframes.cols() != videos.cols())
    throw ContractViolation("fuse: keyframe and video sample counts differ");

  if (model.ablation == Ablation::KVC)
    return FusedBatch{vstack(keyframes, videos)};

  if (keyframes.rows() != model.theta_y.input_dim())
    throw ContractViolation("fuse: keyframe dim " +
                            std::to_string(keyframes.rows()) +
                            " != network input dim " +
                            std::to_string(model.theta_y.input_dim()));
  if (videos.rows() != model.theta_z.input_dim())
    throw ContractViolation("fuse: video dim " +
                            std::to_string(videos.rows()) +
                            " != network input dim " +
                            std::to_string(model.theta_z.input_dim()));

  const Matrix h = forward(model.theta_y, keyframes);
  const Matrix g = forward(model.theta_z, videos);

  if (model.ablation == Ablation::DIVA) return FusedBatch{vstack(h, g)};

  if (!model.sae.solved())
    throw ContractViolation("fuse: model has unsolved autoencoder weights");
  const Matrix stacked = vstack(h, g);
  return FusedBatch{
      vstack(vstack(model.sae.w_h * h, model.sae.w_g * g),
             model.sae.w_e * stacked)};
}

LinearClassifier train_classifier(const FusedBatch& batch,
                                  const std::vector<int>& labels,
                                  std::size_t num_classes, double reg,
                                  std::uint64_t seed) {
  (void)seed;  // training is fully deterministic from a zero start
  const Matrix& x = batch.features;
  if (labels.size() != x.cols())
    throw ContractViolation("train_classifier: label count " +
                            std::to_string(labels.size()) +
                            " != sample count " + std::to_string(x.cols()));
  if (!(reg > 0.0))
    throw ContractViolation("train_classifier: regularization must be > 0");
  int distinct = 0;
  std::vector<bool> seen(num_classes, false);
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
      throw ContractViolation("train_classifier: label " +
                              std::to_string(label) + " outside " +
                              std::to_string(num_classes) + " classes");
    if (!seen[static_cast<std::size_t>(label)]) {
      seen[static_cast<std::size_t>(label)] = true;
      ++distinct;
    }
  }
  if (distinct < 2)
    throw ContractViolation(
        "train_classifier: need at least two classes present, got " +
        std::to_string(distinct));

  const std::size_t dim = x.rows();
  const std::size_t n = x.cols();
  constexpr int kIterations = 500;

  LinearClassifier clf;
  clf.weights = Matrix(num_classes, dim);
  clf.bias.assign(num_classes, 0.0);
  clf.regularization = reg;

  run_tasks(num_classes, [&](std::size_t cls) {
    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<double> violation_sum(dim);
    for (int t = 1; t <= kIterations; ++t) {
      std::fill(violation_sum.begin(), violation_sum.end(), 0.0);
      double bias_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.col(i);
        double score = b;
        for (std::size_t r = 0; r < dim; ++r) score += w[r] * xi[r];
        const double y =
            labels[i] == static_cast<int>(cls) ? 1.0 : -1.0;
        if (y * score < 1.0) {
          for (std::size_t r = 0; r < dim; ++r) violation_sum[r] += y * xi[r];
          bias_sum += y;
        }
      }
      const double step = 1.0 / (reg * static_cast<double>(t));
      const double shrink = 1.0 - step * reg;
      const double scale = step / static_cast<double>(n);
      for (std::size_t r = 0; r < dim; ++r)
        w[r] = shrink * w[r] + scale * violation_sum[r];
      b += scale * bias_sum;
    }
    for (std::size_t r = 0; r < dim; ++r) clf.weights(cls, r) = w[r];
    clf.bias[cls] = b;
  });
  return clf;
}

std::vector<int> predict(const LinearClassifier& clf, const Matrix& features) {
  if (features.rows() != clf.weights.cols())
    throw ContractViolation("predict: feature dim " +
                            std::to_string(features.rows()) +
                            " != classifier dim " +
                            std::to_string(clf.weights.cols()));
  std::vector<int> predictions(features.cols());
  for (std::size_t i = 0; i < features.cols(); ++i) {
    const double* xi = features.col(i);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t cls = 0; cls < clf.weights.rows(); ++cls) {
      double score = clf.bias[cls];
      for (std::size_t r = 0; r < clf.weights.cols(); ++r)
        score += clf.weights(cls, r) * xi[r];
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(cls);
      }
    }
    predictions[i] = best;
  }
  return predictions;
}

Metrics evaluate(const LinearClassifier& clf, const FusedBatch& batch,
                 const std::vector<int>& labels) {
  if (labels.size() != batch.features.cols())
    throw ContractViolation("evaluate: label count != sample count");
  const std::size_t classes = clf.weights.rows();
  const auto predictions = predict(clf, batch.features);

  Metrics metrics;
  metrics.confusion.assign(classes, std::vector<std::int64_t>(classes, 0));
  std::vector<std::int64_t> per_class_total(classes, 0);
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto truth = static_cast<std::size_t>(labels[i]);
    if (truth >= classes)
      throw ContractViolation("evaluate: label " + std::to_string(labels[i]) +
                              " outside classifier classes");
    const auto guess = static_cast<std::size_t>(predictions[i]);
    metrics.confusion[truth][guess] += 1;
    per_class_total[truth] += 1;
    if (truth == guess) ++correct;
  }
  metrics.accuracy =
      static_cast<double>(correct) / static_cast<double>(labels.size());
  metrics.per_class.resize(classes, 0.0);
  for (std::size_t cls = 0; cls < classes; ++cls)
    if (per_class_total[cls] > 0)
      metrics.per_class[cls] =
          static_cast<double>(metrics.confusion[cls][cls]) /
          static_cast<double>(per_class_total[cls]);
  return metrics;
}

nlohmann::json Metrics::to_json() const {
  return nlohmann::json{{"accuracy", accuracy},
                        {"per_class", per_class},
                        {"confusion", confusion}};
}

}  // namespace divafn
