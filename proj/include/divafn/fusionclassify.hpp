#ifndef DIVAFN_FUSIONCLASSIFY_HPP
#define DIVAFN_FUSIONCLASSIFY_HPP

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "divafn/matrix.hpp"
#include "divafn/trainer.hpp"

namespace divafn {

/// Per-sample classification features. In the autoencoder modes each column
/// stacks the three hidden codes [W_H·H; W_G·G; W_E·[H;G]] (3k rows); DIVA
/// concatenates the two learned representations [H; G]; KVC concatenates the
/// raw inputs.
struct FusedBatch {
  Matrix features;
};

FusedBatch fuse(const Model& model, const Matrix& keyframes,
                const Matrix& videos);

struct LinearClassifier {
  Matrix weights;            // classes x feature_dim
  std::vector<double> bias;  // length classes
  double regularization = 1.0;
};

/// One-vs-rest L2-regularized hinge-loss classifiers, trained by
/// deterministic full-batch subgradient descent with the 1/(reg*t) step
/// schedule for a fixed 500 iterations.
LinearClassifier train_classifier(const FusedBatch& batch,
                                  const std::vector<int>& labels,
                                  std::size_t num_classes, double reg,
                                  std::uint64_t seed);

std::vector<int> predict(const LinearClassifier& clf, const Matrix& features);

struct Metrics {
  double accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<std::vector<std::int64_t>> confusion;  // rows true, cols pred

  nlohmann::json to_json() const;
};

Metrics evaluate(const LinearClassifier& clf, const FusedBatch& batch,
                 const std::vector<int>& labels);

}  // namespace divafn

#endif  // DIVAFN_FUSIONCLASSIFY_HPP
