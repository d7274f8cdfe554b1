#include <cmath>

#include "doctest.h"

#include "divafn/fusionclassify.hpp"
#include "divafn/rng.hpp"

using namespace divafn;

namespace {

NetworkParams single_identity_layer(std::size_t dim) {
  NetworkParams params;
  params.layers.push_back({Matrix::identity(dim),
                           std::vector<double>(dim, 0.0),
                           Activation::Identity});
  return params;
}

/// Model with identity keyframe/video networks and given autoencoder
/// weights, so fused features are a linear map of the raw inputs.
Model linear_model(std::size_t d, std::size_t k, Rng& rng,
                   Ablation ablation = Ablation::Full) {
  Model model;
  model.theta_x = single_identity_layer(d);
  model.theta_y = single_identity_layer(d);
  model.theta_z = single_identity_layer(d);
  model.sae.w_f = Matrix::gaussian(k, d, rng);
  model.sae.w_h = Matrix::gaussian(k, d, rng);
  model.sae.w_g = Matrix::gaussian(k, d, rng);
  model.sae.w_e = Matrix::gaussian(k, 2 * d, rng);
  model.ablation = ablation;
  return model;
}

/// Slow reference hinge-loss trainer: projected subgradient descent with ten
/// times the iterations, independent of the production implementation.
std::pair<Matrix, std::vector<double>> reference_hinge(
    const Matrix& x, const std::vector<int>& labels, std::size_t classes,
    double reg, int iterations) {
  Matrix weights(classes, x.rows());
  std::vector<double> bias(classes, 0.0);
  const double radius = 2.0 / std::sqrt(reg);
  for (std::size_t cls = 0; cls < classes; ++cls) {
    std::vector<double> w(x.rows(), 0.0);
    double b = 0.0;
    for (int t = 1; t <= iterations; ++t) {
      std::vector<double> grad(x.rows(), 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < x.cols(); ++i) {
        const double y = labels[i] == static_cast<int>(cls) ? 1.0 : -1.0;
        double score = b;
        for (std::size_t r = 0; r < x.rows(); ++r) score += w[r] * x(r, i);
        if (y * score < 1.0) {
          for (std::size_t r = 0; r < x.rows(); ++r) grad[r] -= y * x(r, i);
          grad_b -= y;
        }
      }
      const double inv_n = 1.0 / static_cast<double>(x.cols());
      const double step = 1.0 / (reg * t);
      double norm = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        w[r] -= step * (reg * w[r] + inv_n * grad[r]);
        norm += w[r] * w[r];
      }
      b -= step * inv_n * grad_b;
      norm = std::sqrt(norm);
      if (norm > radius)
        for (std::size_t r = 0; r < x.rows(); ++r) w[r] *= radius / norm;
    }
    for (std::size_t r = 0; r < x.rows(); ++r) weights(cls, r) = w[r];
    bias[cls] = b;
  }
  return {weights, bias};
}

double accuracy_of(const std::vector<int>& predictions,
                   const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace

TEST_CASE("fuse: shapes and zero propagation") {
  Rng rng(61);
  const std::size_t d = 8, k = 3, n = 5;
  Model model = linear_model(d, k, rng);

  const Matrix keyframes = Matrix::gaussian(d, n, rng);
  const Matrix videos = Matrix::gaussian(d, n, rng);
  const FusedBatch fused = fuse(model, keyframes, videos);
  CHECK(fused.features.rows() == 3 * k);
  CHECK(fused.features.cols() == n);

  const FusedBatch zero = fuse(model, Matrix(d, n), Matrix(d, n));
  CHECK(max_abs(zero.features) == 0.0);

  CHECK_THROWS_AS(fuse(model, Matrix(d + 1, n), Matrix(d, n)),
                  ContractViolation);
}

TEST_CASE("fuse: column assembly matches the hand-stacked products") {
  Rng rng(62);
  const std::size_t d = 6, k = 4, n = 7;
  Model model = linear_model(d, k, rng);
  const Matrix keyframes = Matrix::gaussian(d, n, rng);
  const Matrix videos = Matrix::gaussian(d, n, rng);
  const FusedBatch fused = fuse(model, keyframes, videos);

  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t row = 0; row < k; ++row) {
      double s_h = 0.0, s_g = 0.0, s_e = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        s_h += model.sae.w_h(row, i) * keyframes(i, j);
        s_g += model.sae.w_g(row, i) * videos(i, j);
        s_e += model.sae.w_e(row, i) * keyframes(i, j) +
               model.sae.w_e(row, d + i) * videos(i, j);
      }
      CHECK(std::fabs(fused.features(row, j) - s_h) < 1e-12);
      CHECK(std::fabs(fused.features(k + row, j) - s_g) < 1e-12);
      CHECK(std::fabs(fused.features(2 * k + row, j) - s_e) < 1e-12);
    }
  }
}

TEST_CASE("fuse is linear in the representations") {
  Rng rng(63);
  const std::size_t d = 5, k = 3, n = 4;
  Model model = linear_model(d, k, rng);
  const Matrix kf_a = Matrix::gaussian(d, n, rng);
  const Matrix kf_b = Matrix::gaussian(d, n, rng);
  const Matrix vid_a = Matrix::gaussian(d, n, rng);
  const Matrix vid_b = Matrix::gaussian(d, n, rng);

  const Matrix lhs =
      fuse(model, kf_a + kf_b, vid_a + vid_b).features;
  const Matrix rhs =
      fuse(model, kf_a, vid_a).features + fuse(model, kf_b, vid_b).features;
  CHECK(max_abs_diff(lhs, rhs) < 1e-9);
}

TEST_CASE("fuse honors the ablation modes") {
  Rng rng(64);
  const std::size_t d = 5, k = 3, n = 4;
  const Matrix keyframes = Matrix::gaussian(d, n, rng);
  const Matrix videos = Matrix::gaussian(d, n, rng);

  Model kvc = linear_model(d, k, rng, Ablation::KVC);
  const FusedBatch raw = fuse(kvc, keyframes, videos);
  CHECK(exactly_equal(raw.features, vstack(keyframes, videos)));

  Model diva = linear_model(d, k, rng, Ablation::DIVA);
  diva.sae = SaeWeights{};
  const FusedBatch concat = fuse(diva, keyframes, videos);
  // Identity networks make the learned representations the raw inputs.
  CHECK(exactly_equal(concat.features, vstack(keyframes, videos)));

  Model unsolved = linear_model(d, k, rng);
  unsolved.sae = SaeWeights{};
  CHECK_THROWS_AS(fuse(unsolved, keyframes, videos), ContractViolation);
}

TEST_CASE("train_classifier: separable clusters reach full accuracy") {
  Rng rng(65);
  const std::size_t n_per = 20;
  Matrix x(2, 2 * n_per);
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    const int cls = i < n_per ? 0 : 1;
    labels.push_back(cls);
    x(0, i) = (cls == 0 ? -2.0 : 2.0) + 0.3 * rng.gaussian();
    x(1, i) = 0.3 * rng.gaussian();
  }
  const LinearClassifier clf =
      train_classifier(FusedBatch{x}, labels, 2, 1.0, 0);
  CHECK(accuracy_of(predict(clf, x), labels) == 1.0);
}

TEST_CASE("train_classifier: duplicating every column keeps the decision "
          "function") {
  Rng rng(66);
  const std::size_t n = 30;
  Matrix x(3, n);
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(i % 3));
    for (std::size_t r = 0; r < 3; ++r)
      x(r, i) = rng.gaussian() + (labels.back() == static_cast<int>(r) ? 1.5
                                                                       : 0.0);
  }
  Matrix doubled(3, 2 * n);
  std::vector<int> doubled_labels;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < 3; ++r) {
      doubled(r, 2 * i) = x(r, i);
      doubled(r, 2 * i + 1) = x(r, i);
    }
    doubled_labels.push_back(labels[i]);
    doubled_labels.push_back(labels[i]);
  }
  const LinearClassifier base =
      train_classifier(FusedBatch{x}, labels, 3, 1.0, 0);
  const LinearClassifier dup =
      train_classifier(FusedBatch{doubled}, doubled_labels, 3, 1.0, 0);
  CHECK(max_abs_diff(base.weights, dup.weights) < 1e-9);
  for (std::size_t cls = 0; cls < 3; ++cls)
    CHECK(std::fabs(base.bias[cls] - dup.bias[cls]) < 1e-9);
}

TEST_CASE("train_classifier tracks a slow reference minimizer") {
  Rng rng(67);
  const std::size_t classes = 4, per_class = 25, dim = 6;
  Matrix x(dim, classes * per_class);
  std::vector<int> labels;
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      labels.push_back(static_cast<int>(c));
      const std::size_t col = c * per_class + i;
      for (std::size_t r = 0; r < dim; ++r)
        x(r, col) = rng.gaussian() + (r == c ? 2.0 : 0.0);
    }

  const LinearClassifier fast =
      train_classifier(FusedBatch{x}, labels, classes, 1.0, 0);
  const auto [slow_w, slow_b] = reference_hinge(x, labels, classes, 1.0, 5000);
  LinearClassifier slow;
  slow.weights = slow_w;
  slow.bias = slow_b;
  slow.regularization = 1.0;

  const double fast_acc = accuracy_of(predict(fast, x), labels);
  const double slow_acc = accuracy_of(predict(slow, x), labels);
  CHECK(std::fabs(fast_acc - slow_acc) <= 0.02);
}

TEST_CASE("train_classifier rejects single-class input") {
  Matrix x(2, 4, 1.0);
  CHECK_THROWS_AS(
      train_classifier(FusedBatch{x}, {1, 1, 1, 1}, 3, 1.0, 0),
      ContractViolation);
}

TEST_CASE("predictions are invariant under positive score rescaling") {
  Rng rng(68);
  LinearClassifier clf;
  clf.weights = Matrix::gaussian(4, 5, rng);
  clf.bias = {0.1, -0.2, 0.3, 0.0};
  const Matrix x = Matrix::gaussian(5, 12, rng);

  LinearClassifier scaled = clf;
  scaled.weights = 3.5 * clf.weights;
  for (double& b : scaled.bias) b *= 3.5;
  CHECK(predict(clf, x) == predict(scaled, x));
}

TEST_CASE("evaluate: metrics and counting oracle") {
  SUBCASE("always predicting class 0 scores 1/C on balanced labels") {
    const std::size_t classes = 4, per_class = 5;
    LinearClassifier constant;
    constant.weights = Matrix(classes, 3);
    constant.bias.assign(classes, 0.0);
    constant.bias[0] = 1.0;
    std::vector<int> labels;
    for (std::size_t c = 0; c < classes; ++c)
      for (std::size_t i = 0; i < per_class; ++i)
        labels.push_back(static_cast<int>(c));
    const Matrix x(3, labels.size(), 0.5);
    const Metrics metrics = evaluate(constant, FusedBatch{x}, labels);
    CHECK(metrics.accuracy == doctest::Approx(1.0 / classes));
    CHECK(metrics.per_class[0] == 1.0);
    CHECK(metrics.per_class[1] == 0.0);
  }

  SUBCASE("independent counting loop agrees exactly") {
    Rng rng(69);
    const std::size_t classes = 3, n = 40;
    LinearClassifier clf;
    clf.weights = Matrix::gaussian(classes, 4, rng);
    clf.bias = {0.0, 0.1, -0.1};
    Matrix x = Matrix::gaussian(4, n, rng);
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i)
      labels.push_back(static_cast<int>(rng.below(classes)));

    const Metrics metrics = evaluate(clf, FusedBatch{x}, labels);
    const auto predictions = predict(clf, x);
    std::size_t correct = 0;
    std::vector<std::vector<std::int64_t>> confusion(
        classes, std::vector<std::int64_t>(classes, 0));
    for (std::size_t i = 0; i < n; ++i) {
      if (predictions[i] == labels[i]) ++correct;
      confusion[static_cast<std::size_t>(labels[i])]
               [static_cast<std::size_t>(predictions[i])]++;
    }
    CHECK(metrics.accuracy ==
          static_cast<double>(correct) / static_cast<double>(n));
    CHECK(metrics.confusion == confusion);

    // accuracy == trace(confusion) / n exactly
    std::int64_t diag = 0;
    for (std::size_t c = 0; c < classes; ++c) diag += metrics.confusion[c][c];
    CHECK(metrics.accuracy ==
          static_cast<double>(diag) / static_cast<double>(n));
  }
}

TEST_CASE("results are independent of the DVFN_THREADS budget") {
  Rng rng(70);
  const std::size_t classes = 4, n = 24, dim = 5;
  Matrix x(dim, n);
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(static_cast<int>(i % classes));
    for (std::size_t r = 0; r < dim; ++r)
      x(r, i) = rng.gaussian() + (labels.back() == static_cast<int>(r) ? 1.0
                                                                       : 0.0);
  }
  setenv("DVFN_THREADS", "1", 1);
  const LinearClassifier serial =
      train_classifier(FusedBatch{x}, labels, classes, 1.0, 0);
  setenv("DVFN_THREADS", "3", 1);
  const LinearClassifier threaded =
      train_classifier(FusedBatch{x}, labels, classes, 1.0, 0);
  unsetenv("DVFN_THREADS");
  CHECK(exactly_equal(serial.weights, threaded.weights));
  CHECK(serial.bias == threaded.bias);
}
