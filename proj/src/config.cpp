#include "divafn/config.hpp"

#include <fstream>

namespace divafn {

namespace {

template <typename T>
T read_field(const nlohmann::json& value, const std::string& name) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + name + "' has the wrong type");
  }
}

void parse_synth(const nlohmann::json& section, AppConfig& cfg) {
  for (const auto& [key, value] : section.items()) {
    const std::string name = "synth." + key;
    if (key == "seed")
      cfg.synth_seed = read_field<std::uint64_t>(value, name);
    else if (key == "classes") {
      cfg.synth.classes = read_field<std::size_t>(value, name);
      cfg.has_classes = true;
    } else if (key == "samples_per_class") {
      cfg.synth.samples_per_class = read_field<std::size_t>(value, name);
      cfg.has_samples_per_class = true;
    } else if (key == "dim_image")
      cfg.synth.dim_image = read_field<std::size_t>(value, name);
    else if (key == "dim_keyframe")
      cfg.synth.dim_keyframe = read_field<std::size_t>(value, name);
    else if (key == "dim_video")
      cfg.synth.dim_video = read_field<std::size_t>(value, name);
    else if (key == "dim_semantic")
      cfg.synth.dim_semantic = read_field<std::size_t>(value, name);
    else if (key == "latent_dim")
      cfg.synth.latent_dim = read_field<std::size_t>(value, name);
    else if (key == "noise_sigma")
      cfg.synth.noise_sigma = read_field<double>(value, name);
    else if (key == "scale_image")
      cfg.synth.scale_image = read_field<double>(value, name);
    else if (key == "scale_keyframe")
      cfg.synth.scale_keyframe = read_field<double>(value, name);
    else if (key == "scale_video")
      cfg.synth.scale_video = read_field<double>(value, name);
    else if (key == "proto_base")
      cfg.synth.proto_base = read_field<double>(value, name);
    else if (key == "proto_spread")
      cfg.synth.proto_spread = read_field<double>(value, name);
    else
      throw ConfigError("unknown config field '" + name + "'");
  }
}

void parse_hyperparams(const nlohmann::json& section, AppConfig& cfg) {
  for (const auto& [key, value] : section.items()) {
    const std::string name = "hyperparams." + key;
    if (key == "a")
      cfg.hp.a = read_field<double>(value, name);
    else if (key == "b")
      cfg.hp.b = read_field<double>(value, name);
    else if (key == "c")
      cfg.hp.c = read_field<double>(value, name);
    else if (key == "beta")
      cfg.hp.beta = read_field<double>(value, name);
    else if (key == "lambda")
      cfg.hp.lambda = read_field<double>(value, name);
    else if (key == "d")
      cfg.hp.d = read_field<std::size_t>(value, name);
    else if (key == "lr")
      cfg.hp.lr = read_field<double>(value, name);
    else if (key == "batch")
      cfg.hp.batch = read_field<std::size_t>(value, name);
    else if (key == "iters")
      cfg.hp.iters = read_field<std::size_t>(value, name);
    else
      throw ConfigError("unknown config field '" + name + "'");
  }
}

void parse_train(const nlohmann::json& section, AppConfig& cfg) {
  for (const auto& [key, value] : section.items()) {
    const std::string name = "train." + key;
    if (key == "ablation") {
      try {
        cfg.ablation =
            ablation_from_name(read_field<std::string>(value, name));
      } catch (const ConfigError&) {
        throw ConfigError("config field '" + name +
                          "' must be full, DIVA, DIVF or KVC");
      }
    } else if (key == "seed")
      cfg.train_seed = read_field<std::uint64_t>(value, name);
    else if (key == "ratio") {
      cfg.ratio = read_field<double>(value, name);
      if (!(cfg.ratio > 0.0 && cfg.ratio <= 1.0))
        throw ConfigError("config field 'train.ratio' must be in (0, 1]");
    } else if (key == "checkpoint_interval")
      cfg.checkpoint_interval = read_field<std::size_t>(value, name);
    else if (key == "strict_paper_gradients")
      cfg.strict_paper_gradients = read_field<bool>(value, name);
    else
      throw ConfigError("unknown config field '" + name + "'");
  }
}

void parse_classifier(const nlohmann::json& section, AppConfig& cfg) {
  for (const auto& [key, value] : section.items()) {
    const std::string name = "classifier." + key;
    if (key == "reg") {
      cfg.classifier_reg = read_field<double>(value, name);
      if (!(cfg.classifier_reg > 0.0))
        throw ConfigError("config field 'classifier.reg' must be > 0");
    } else
      throw ConfigError("unknown config field '" + name + "'");
  }
}

}  // namespace

AppConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  AppConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_object())
      throw ConfigError("config section '" + key + "' must be an object");
    if (key == "synth")
      parse_synth(value, cfg);
    else if (key == "hyperparams")
      parse_hyperparams(value, cfg);
    else if (key == "train")
      parse_train(value, cfg);
    else if (key == "classifier")
      parse_classifier(value, cfg);
    else
      throw ConfigError("unknown config section '" + key + "'");
  }
  cfg.hp.validate();
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

nlohmann::json AppConfig::to_json() const {
  nlohmann::json j;
  j["synth"] = {{"seed", synth_seed},
                {"classes", synth.classes},
                {"samples_per_class", synth.samples_per_class},
                {"dim_image", synth.dim_image},
                {"dim_keyframe", synth.dim_keyframe},
                {"dim_video", synth.dim_video},
                {"dim_semantic", synth.dim_semantic},
                {"latent_dim", synth.latent_dim},
                {"noise_sigma", synth.noise_sigma},
                {"scale_image", synth.scale_image},
                {"scale_keyframe", synth.scale_keyframe},
                {"scale_video", synth.scale_video},
                {"proto_base", synth.proto_base},
                {"proto_spread", synth.proto_spread}};
  j["hyperparams"] = {{"a", hp.a},         {"b", hp.b},
                      {"c", hp.c},         {"beta", hp.beta},
                      {"lambda", hp.lambda}, {"d", hp.d},
                      {"lr", hp.lr},       {"batch", hp.batch},
                      {"iters", hp.iters}};
  j["train"] = {{"ablation", ablation_name(ablation)},
                {"seed", train_seed},
                {"ratio", ratio},
                {"checkpoint_interval", checkpoint_interval},
                {"strict_paper_gradients", strict_paper_gradients}};
  j["classifier"] = {{"reg", classifier_reg}};
  return j;
}

}  // namespace divafn
