#include "divafn/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "divafn/fmx.hpp"
#include "divafn/rng.hpp"

namespace divafn {

namespace {

/// Modified Gram-Schmidt over the columns; returns a matrix with orthonormal
/// columns spanning the input columns.
Matrix orthonormal_columns(Matrix m) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double* cj = m.col(j);
    for (std::size_t prev = 0; prev < j; ++prev) {
      const double* cp = m.col(prev);
      double dot = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) dot += cp[i] * cj[i];
      for (std::size_t i = 0; i < m.rows(); ++i) cj[i] -= dot * cp[i];
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) norm += cj[i] * cj[i];
    norm = std::sqrt(norm);
    if (norm < 1e-10)
      throw NumericalFailure(
          "orthonormal_columns: rank-deficient random draw");
    for (std::size_t i = 0; i < m.rows(); ++i) cj[i] /= norm;
  }
  return m;
}

std::vector<std::vector<std::size_t>> indices_by_class(
    const std::vector<int>& labels) {
  int max_label = 0;
  for (int label : labels) max_label = std::max(max_label, label);
  std::vector<std::vector<std::size_t>> groups(
      static_cast<std::size_t>(max_label) + 1);
  for (std::size_t i = 0; i < labels.size(); ++i)
    groups[static_cast<std::size_t>(labels[i])].push_back(i);
  return groups;
}

}  // namespace

SimilarityMatrix build_similarity(const std::vector<int>& labels_a,
                                  const std::vector<int>& labels_b) {
  if (labels_a.empty() || labels_b.empty())
    throw ContractViolation("build_similarity: empty label vector");
  Matrix m(labels_a.size(), labels_b.size());
  for (std::size_t j = 0; j < labels_b.size(); ++j)
    for (std::size_t i = 0; i < labels_a.size(); ++i)
      m(i, j) = labels_a[i] == labels_b[j] ? 1.0 : 0.0;
  return SimilarityMatrix{std::move(m)};
}

void SemanticTable::validate() const {
  if (embeddings.empty())
    throw ContractViolation("semantic table: empty embeddings");
  if (!all_finite(embeddings))
    throw ContractViolation("semantic table: non-finite entries");
  for (std::size_t a = 0; a < embeddings.cols(); ++a)
    for (std::size_t b = a + 1; b < embeddings.cols(); ++b) {
      bool identical = true;
      for (std::size_t i = 0; i < embeddings.rows() && identical; ++i)
        identical = embeddings(i, a) == embeddings(i, b);
      if (identical)
        throw ContractViolation("semantic table: classes " +
                                std::to_string(a) + " and " +
                                std::to_string(b) +
                                " have identical embeddings");
    }
  if (normalized) {
    for (std::size_t j = 0; j < embeddings.cols(); ++j) {
      double norm = 0.0;
      for (std::size_t i = 0; i < embeddings.rows(); ++i)
        norm += embeddings(i, j) * embeddings(i, j);
      if (std::fabs(std::sqrt(norm) - 1.0) > 1e-9)
        throw ContractViolation("semantic table: column " +
                                std::to_string(j) +
                                " not unit-norm but table is flagged "
                                "normalized");
    }
  }
}

Matrix expand_semantics(const SemanticTable& table,
                        const std::vector<int>& labels) {
  if (labels.empty()) throw ContractViolation("expand_semantics: no labels");
  Matrix s(table.dim(), labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 ||
        static_cast<std::size_t>(labels[j]) >= table.classes())
      throw ContractViolation("expand_semantics: label " +
                              std::to_string(labels[j]) +
                              " outside table with " +
                              std::to_string(table.classes()) + " classes");
    const double* src = table.embeddings.col(
        static_cast<std::size_t>(labels[j]));
    double* dst = s.col(j);
    for (std::size_t i = 0; i < table.dim(); ++i) dst[i] = src[i];
  }
  return s;
}

void TriModalDataset::validate() const {
  const std::size_t n = labels.size();
  if (n == 0) throw ContractViolation("dataset: no samples");
  if (images.cols() != n || keyframes.cols() != n || videos.cols() != n)
    throw ContractViolation(
        "dataset: modality column counts disagree with label count " +
        std::to_string(n));
  for (int label : labels)
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
      throw ContractViolation("dataset: label " + std::to_string(label) +
                              " outside " +
                              std::to_string(class_names.size()) +
                              " classes");
  if (!all_finite(images) || !all_finite(keyframes) || !all_finite(videos))
    throw ContractViolation("dataset: non-finite feature entries");
}

TriModalDataset TriModalDataset::subset(
    const std::vector<std::size_t>& columns) const {
  TriModalDataset out;
  out.images = select_columns(images, columns);
  out.keyframes = select_columns(keyframes, columns);
  out.videos = select_columns(videos, columns);
  out.labels.reserve(columns.size());
  for (std::size_t c : columns) {
    if (c >= labels.size())
      throw ContractViolation("dataset subset: column " + std::to_string(c) +
                              " out of range");
    out.labels.push_back(labels[c]);
  }
  out.class_names = class_names;
  return out;
}

void SynthConfig::validate() const {
  if (classes < 2)
    throw ContractViolation("synth config: classes must be >= 2");
  if (samples_per_class == 0)
    throw ContractViolation("synth config: samples_per_class must be >= 1");
  if (dim_image == 0 || dim_keyframe == 0 || dim_video == 0 ||
      dim_semantic == 0 || latent_dim == 0)
    throw ContractViolation("synth config: all dimensions must be positive");
  if (noise_sigma < 0.0)
    throw ContractViolation("synth config: noise_sigma must be >= 0");
  if (latent_dim < classes + 1)
    throw ContractViolation(
        "synth config: latent_dim must be at least classes + 1 (" +
        std::to_string(classes + 1) + ") to separate class prototypes");
  const std::size_t min_dim =
      std::min({dim_image, dim_keyframe, dim_video});
  if (min_dim < latent_dim)
    throw ContractViolation(
        "synth config: modality dims must be >= latent_dim");
  if (scale_image <= 0.0 || scale_keyframe <= 0.0 || scale_video <= 0.0)
    throw ContractViolation("synth config: modality scales must be positive");
  if (proto_base < 0.0 || proto_spread <= 0.0)
    throw ContractViolation(
        "synth config: proto_base must be >= 0 and proto_spread > 0");
}

SynthResult generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = cfg.classes * cfg.samples_per_class;

  // Shared base direction plus one orthonormal offset per class, so every
  // pair of classes is equally separated in latent space.
  Rng proto_rng(Rng::stream(seed, 1));
  Matrix basis = orthonormal_columns(
      Matrix::gaussian(cfg.latent_dim, cfg.classes + 1, proto_rng));
  Matrix prototypes(cfg.latent_dim, cfg.classes);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    for (std::size_t i = 0; i < cfg.latent_dim; ++i)
      prototypes(i, c) = cfg.proto_base * basis(i, 0) +
                         cfg.proto_spread * basis(i, c + 1);

  TriModalDataset ds;
  ds.labels.reserve(n);
  for (std::size_t c = 0; c < cfg.classes; ++c)
    for (std::size_t s = 0; s < cfg.samples_per_class; ++s)
      ds.labels.push_back(static_cast<int>(c));
  for (std::size_t c = 0; c < cfg.classes; ++c)
    ds.class_names.push_back("class_" + std::to_string(c));

  const struct {
    std::size_t dim;
    double scale;
    std::uint64_t tag;
  } modalities[3] = {{cfg.dim_image, cfg.scale_image, 10},
                     {cfg.dim_keyframe, cfg.scale_keyframe, 11},
                     {cfg.dim_video, cfg.scale_video, 12}};
  Matrix* targets[3] = {&ds.images, &ds.keyframes, &ds.videos};

  for (int mod = 0; mod < 3; ++mod) {
    Rng map_rng(Rng::stream(seed, 2, modalities[mod].tag));
    Matrix map = orthonormal_columns(
        Matrix::gaussian(modalities[mod].dim, cfg.latent_dim, map_rng));
    Matrix clean = modalities[mod].scale * (map * prototypes);

    Rng noise_rng(Rng::stream(seed, 3, modalities[mod].tag));
    Matrix features(modalities[mod].dim, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double* proto_col =
          clean.col(static_cast<std::size_t>(ds.labels[j]));
      double* dst = features.col(j);
      for (std::size_t i = 0; i < modalities[mod].dim; ++i)
        dst[i] = proto_col[i] + cfg.noise_sigma * noise_rng.gaussian();
    }
    *targets[mod] = std::move(features);
  }

  Rng sem_rng(Rng::stream(seed, 4));
  Matrix table = Matrix::gaussian(cfg.dim_semantic, cfg.classes, sem_rng);
  for (std::size_t j = 0; j < cfg.classes; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < cfg.dim_semantic; ++i)
      norm += table(i, j) * table(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-10)
      throw NumericalFailure("generate_synthetic: degenerate semantic draw");
    for (std::size_t i = 0; i < cfg.dim_semantic; ++i) table(i, j) /= norm;
  }

  SynthResult result;
  result.dataset = std::move(ds);
  result.semantics = SemanticTable{std::move(table), true};
  result.dataset.validate();
  result.semantics.validate();
  return result;
}

std::vector<std::size_t> stratified_subset(const std::vector<int>& labels,
                                           double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw ContractViolation("stratified_subset: ratio must be in (0, 1]");
  auto groups = indices_by_class(labels);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    auto& group = groups[c];
    if (group.empty()) continue;
    Rng rng(Rng::stream(seed, 5, c));
    rng.shuffle(group);
    const std::size_t count = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(ratio * static_cast<double>(group.size()))));
    for (std::size_t i = 0; i < std::min(count, group.size()); ++i)
      chosen.push_back(group[i]);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void save_dataset(const TriModalDataset& ds, const SemanticTable& table,
                  const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);
  save_fmx(ds.images, (base / "images.fmx").string());
  save_fmx(ds.keyframes, (base / "keyframes.fmx").string());
  save_fmx(ds.videos, (base / "videos.fmx").string());
  save_fmx(table.embeddings, (base / "semantics.fmx").string());
  save_labels(ds.labels, (base / "labels.txt").string());
  save_lines(ds.class_names, (base / "classes.txt").string());
}

SynthResult load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  SynthResult result;
  result.dataset.images = load_matrix_auto((base / "images").string());
  result.dataset.keyframes = load_matrix_auto((base / "keyframes").string());
  result.dataset.videos = load_matrix_auto((base / "videos").string());
  result.dataset.labels = load_labels((base / "labels.txt").string());
  result.dataset.class_names = load_lines((base / "classes.txt").string());
  result.semantics.embeddings =
      load_matrix_auto((base / "semantics").string());

  bool unit = true;
  const Matrix& emb = result.semantics.embeddings;
  for (std::size_t j = 0; j < emb.cols() && unit; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < emb.rows(); ++i) norm += emb(i, j) * emb(i, j);
    unit = std::fabs(std::sqrt(norm) - 1.0) <= 1e-9;
  }
  result.semantics.normalized = unit;

  if (result.semantics.classes() != result.dataset.class_count())
    throw FormatError("dataset dir '" + dir + "': semantic table has " +
                      std::to_string(result.semantics.classes()) +
                      " classes but classes.txt lists " +
                      std::to_string(result.dataset.class_count()));
  result.dataset.validate();
  result.semantics.validate();
  return result;
}

}  // namespace divafn
