#ifndef DIVAFN_CONFIG_HPP
#define DIVAFN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "divafn/datamodel.hpp"
#include "divafn/objective.hpp"
#include "divafn/trainer.hpp"

namespace divafn {

/// One JSON config shared by every command. Unknown fields are rejected so
/// hyperparameter typos cannot pass silently. All sections and fields are
/// optional except where a command states otherwise (synth requires
/// synth.classes and synth.samples_per_class).
///
/// {
///   "synth":       { seed, classes, samples_per_class, dim_image,
///                    dim_keyframe, dim_video, dim_semantic, latent_dim,
///                    noise_sigma, scale_image, scale_keyframe, scale_video,
///                    proto_base, proto_spread },
///   "hyperparams": { a, b, c, beta, lambda, d, lr, batch, iters },
///   "train":       { ablation, seed, ratio, checkpoint_interval,
///                    strict_paper_gradients },
///   "classifier":  { reg }
/// }
struct AppConfig {
  SynthConfig synth;
  std::uint64_t synth_seed = 0;
  bool has_classes = false;
  bool has_samples_per_class = false;

  Hyperparams hp;
  Ablation ablation = Ablation::Full;
  std::uint64_t train_seed = 0;
  double ratio = 1.0;
  std::size_t checkpoint_interval = 0;
  bool strict_paper_gradients = false;

  double classifier_reg = 1.0;

  nlohmann::json to_json() const;
};

AppConfig parse_config(const nlohmann::json& j);
AppConfig load_config(const std::string& path);

}  // namespace divafn

#endif  // DIVAFN_CONFIG_HPP
