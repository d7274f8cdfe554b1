#ifndef DIVAFN_DATAMODEL_HPP
#define DIVAFN_DATAMODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "divafn/matrix.hpp"

namespace divafn {

using FeatureMatrix = Matrix;

/// Binary pairwise same-class indicator between two label vectors.
struct SimilarityMatrix {
  Matrix entries;  // n_a x n_b, each entry 0 or 1
};

SimilarityMatrix build_similarity(const std::vector<int>& labels_a,
                                  const std::vector<int>& labels_b);

/// One semantic embedding column per class.
struct SemanticTable {
  Matrix embeddings;  // k x C
  bool normalized = false;

  std::size_t dim() const { return embeddings.rows(); }
  std::size_t classes() const { return embeddings.cols(); }
  void validate() const;
};

/// Per-sample semantic matrix: column i is the table column for labels[i].
Matrix expand_semantics(const SemanticTable& table,
                        const std::vector<int>& labels);

/// Aligned image / keyframe / video feature triplets with shared labels.
struct TriModalDataset {
  FeatureMatrix images;     // p_x x n
  FeatureMatrix keyframes;  // p_y x n
  FeatureMatrix videos;     // d_v x n
  std::vector<int> labels;  // length n, values in [0, C)
  std::vector<std::string> class_names;

  std::size_t sample_count() const { return labels.size(); }
  std::size_t class_count() const { return class_names.size(); }
  void validate() const;
  TriModalDataset subset(const std::vector<std::size_t>& columns) const;
};

// Default geometry mirrors the modality roles the pipeline expects: images
// are the strong auxiliary modality, keyframes are compact and reliable,
// videos are high-dimensional with weak class signal, so a few-shot
// classifier on raw video features generalizes poorly while a full-data one
// still fits them.
struct SynthConfig {
  std::size_t classes = 0;            // required
  std::size_t samples_per_class = 0;  // required
  std::size_t dim_image = 48;
  std::size_t dim_keyframe = 16;
  std::size_t dim_video = 384;
  std::size_t dim_semantic = 16;
  std::size_t latent_dim = 12;
  double noise_sigma = 0.05;
  // Per-modality gain of the latent-to-feature map; controls how much class
  // signal survives relative to the shared noise level.
  double scale_image = 15.0;
  double scale_keyframe = 1.5;
  double scale_video = 0.1;
  // Latent prototypes are proto_base * (shared direction) plus
  // proto_spread * (per-class orthonormal offset).
  double proto_base = 0.0;
  double proto_spread = 1.0;

  void validate() const;
};

struct SynthResult {
  TriModalDataset dataset;
  SemanticTable semantics;
};

/// Deterministic synthetic tri-modal dataset: per-class latent prototypes
/// pushed through one fixed random linear map per modality, plus isotropic
/// Gaussian noise of scale noise_sigma.
SynthResult generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

/// Seeded stratified subset: per class, round(ratio * count) columns
/// (at least one). Returned indices are sorted ascending.
std::vector<std::size_t> stratified_subset(const std::vector<int>& labels,
                                           double ratio, std::uint64_t seed);

// Directory layout: images.fmx, keyframes.fmx, videos.fmx, semantics.fmx,
// labels.txt, classes.txt. Matrices may also be given as .csv.
void save_dataset(const TriModalDataset& ds, const SemanticTable& table,
                  const std::string& dir);
SynthResult load_dataset(const std::string& dir);

}  // namespace divafn

#endif  // DIVAFN_DATAMODEL_HPP
