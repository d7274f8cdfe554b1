#include "divafn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "divafn/fmx.hpp"
#include "divafn/rng.hpp"

namespace divafn {

namespace {

constexpr char kCheckpointMagic[5] = {'D', 'V', 'F', 'N', '1'};

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return order;
}

std::vector<std::vector<std::size_t>> minibatches(
    const std::vector<std::size_t>& order, std::size_t batch) {
  std::vector<std::vector<std::size_t>> chunks;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t stop = std::min(order.size(), start + batch);
    chunks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return chunks;
}

void check_finite(const Matrix& m, std::size_t iteration, const char* what) {
  if (!all_finite(m))
    throw DivergenceError(iteration,
                          std::string("non-finite values in ") + what +
                              "; reduce the learning rate");
}

void check_params_finite(const NetworkParams& params, std::size_t iteration,
                         const char* what) {
  if (!params.finite())
    throw DivergenceError(iteration,
                          std::string("non-finite parameters in ") + what +
                              "; reduce the learning rate");
}

}  // namespace

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::DIVA: return "DIVA";
    case Ablation::DIVF: return "DIVF";
    case Ablation::KVC: return "KVC";
  }
  throw ContractViolation("unknown ablation tag");
}

Ablation ablation_from_name(const std::string& name) {
  std::string lower;
  for (char ch : name)
    lower.push_back(static_cast<char>(std::tolower(
        static_cast<unsigned char>(ch))));
  if (lower == "full") return Ablation::Full;
  if (lower == "diva") return Ablation::DIVA;
  if (lower == "divf") return Ablation::DIVF;
  if (lower == "kvc") return Ablation::KVC;
  throw ConfigError("unknown ablation '" + name +
                    "' (expected full, DIVA, DIVF or KVC)");
}

Model init_model(const TriModalDataset& dataset, const SemanticTable& table,
                 const TrainConfig& cfg) {
  dataset.validate();
  table.validate();
  cfg.hp.validate();
  if (table.classes() < dataset.class_count())
    throw ContractViolation("semantic table covers " +
                            std::to_string(table.classes()) +
                            " classes but the dataset has " +
                            std::to_string(dataset.class_count()));

  Model model;
  model.hp = cfg.hp;
  model.ablation = cfg.ablation;
  model.strict_paper_gradients = cfg.strict_paper_gradients;
  model.seed = cfg.seed;
  if (cfg.ablation == Ablation::DIVA) {
    model.hp.beta = 0.0;
    model.hp.lambda = 0.0;
  }

  const std::size_t d = model.hp.d;
  const std::vector<Activation> acts{Activation::Rectifier,
                                     Activation::Identity};
  model.theta_x = init_params({dataset.images.rows(), d, d}, acts,
                              Rng::stream(cfg.seed, 21));
  model.theta_y = init_params({dataset.keyframes.rows(), d, d}, acts,
                              Rng::stream(cfg.seed, 22));
  model.theta_z = init_params({dataset.videos.rows(), d, d}, acts,
                              Rng::stream(cfg.seed, 23));

  if (cfg.ablation == Ablation::Full || cfg.ablation == Ablation::DIVF) {
    const std::size_t k = table.dim();
    model.sae.w_f = Matrix(k, d);
    model.sae.w_h = Matrix(k, d);
    model.sae.w_g = Matrix(k, d);
    model.sae.w_e = Matrix(k, 2 * d);
  }
  return model;
}

void train_steps(Model& model, const TriModalDataset& dataset,
                 const SemanticTable& table,
                 std::size_t additional_iterations) {
  if (model.ablation == Ablation::KVC) return;
  dataset.validate();
  const std::size_t n = dataset.sample_count();
  const Hyperparams& hp = model.hp;

  const Matrix semantics = expand_semantics(table, dataset.labels);
  const SimilarityMatrix sim =
      build_similarity(dataset.labels, dataset.labels);

  Matrix f = forward(model.theta_x, dataset.images);
  Matrix h = forward(model.theta_y, dataset.keyframes);
  Matrix g = forward(model.theta_z, dataset.videos);

  const auto evaluate_parts = [&](const Matrix& stacked) {
    return objective_parts(f, h, g, stacked, sim, sim, sim, semantics,
                           model.sae, hp);
  };

  if (model.completed_iterations == 0 && !model.has_initial_objective) {
    model.initial_objective = evaluate_parts(vstack(h, g)).total();
    model.has_initial_objective = true;
  }
  if (additional_iterations == 0) return;

  const GradientMode mode = model.strict_paper_gradients
                                ? GradientMode::StrictPaper
                                : GradientMode::Default;

  for (std::size_t step = 0; step < additional_iterations; ++step) {
    const std::size_t iteration = model.completed_iterations + 1;

    if (model.ablation != Ablation::DIVF) {
      // Step 1: image network. The opposing-modality caches h and g are
      // exact for the whole epoch because theta_y and theta_z are fixed.
      const auto chunks = minibatches(
          shuffled_indices(n, Rng::stream(model.seed, 100, 3 * iteration)),
          hp.batch);
      for (const auto& chunk : chunks) {
        const Matrix inputs = select_columns(dataset.images, chunk);
        const Matrix outputs = forward(model.theta_x, inputs);
        const Matrix grad = grad_f_columns(chunk, outputs, h, g, sim, sim,
                                           model.sae.w_f, semantics, hp);
        model.theta_x = backward_update(model.theta_x, inputs, grad, hp.lr);
      }
      check_params_finite(model.theta_x, iteration, "theta_x");
      f = forward(model.theta_x, dataset.images);
      check_finite(f, iteration, "image representations");

      // Step 2: keyframe network.
      const auto chunks_h = minibatches(
          shuffled_indices(n,
                           Rng::stream(model.seed, 100, 3 * iteration + 1)),
          hp.batch);
      for (const auto& chunk : chunks_h) {
        const Matrix inputs = select_columns(dataset.keyframes, chunk);
        const Matrix outputs = forward(model.theta_y, inputs);
        const Matrix grad =
            grad_h_columns(chunk, outputs, f, g, sim, sim, model.sae.w_h,
                           model.sae.w_e, semantics, hp, mode);
        model.theta_y = backward_update(model.theta_y, inputs, grad, hp.lr);
      }
      check_params_finite(model.theta_y, iteration, "theta_y");
      h = forward(model.theta_y, dataset.keyframes);
      check_finite(h, iteration, "keyframe representations");

      // Step 3: video network.
      const auto chunks_g = minibatches(
          shuffled_indices(n,
                           Rng::stream(model.seed, 100, 3 * iteration + 2)),
          hp.batch);
      for (const auto& chunk : chunks_g) {
        const Matrix inputs = select_columns(dataset.videos, chunk);
        const Matrix outputs = forward(model.theta_z, inputs);
        const Matrix grad =
            grad_g_columns(chunk, outputs, f, h, sim, sim, model.sae.w_g,
                           model.sae.w_e, semantics, hp, mode);
        model.theta_z = backward_update(model.theta_z, inputs, grad, hp.lr);
      }
      check_params_finite(model.theta_z, iteration, "theta_z");
      g = forward(model.theta_z, dataset.videos);
      check_finite(g, iteration, "video representations");
    }

    double objective;
    if (model.ablation == Ablation::DIVA) {
      objective = evaluate_parts(vstack(h, g)).total();
    } else {
      // Steps 4-7: exact convex solves, each of which can only lower its
      // own summand of the objective.
      const Matrix stacked = vstack(h, g);
      ObjectiveParts parts = evaluate_parts(stacked);
      model.step_trace.push_back({iteration, "pre_solves", parts.total()});
      try {
        SolveStats stats;
        model.sae.w_f = solve_w(f, semantics, hp.beta, hp.lambda, &stats);
        parts.sae_f = sae_penalty(f, model.sae.w_f, semantics, hp.beta,
                                  hp.lambda);
        model.step_trace.push_back({iteration, "w_f", parts.total()});

        model.sae.w_h = solve_w(h, semantics, hp.beta, hp.lambda, &stats);
        parts.sae_h = sae_penalty(h, model.sae.w_h, semantics, hp.beta,
                                  hp.lambda);
        model.step_trace.push_back({iteration, "w_h", parts.total()});

        model.sae.w_g = solve_w(g, semantics, hp.beta, hp.lambda, &stats);
        parts.sae_g = sae_penalty(g, model.sae.w_g, semantics, hp.beta,
                                  hp.lambda);
        model.step_trace.push_back({iteration, "w_g", parts.total()});

        model.sae.w_e = solve_w(stacked, semantics, hp.beta, hp.lambda,
                                &stats);
        parts.sae_e = sae_penalty(stacked, model.sae.w_e, semantics, hp.beta,
                                  hp.lambda);
        model.step_trace.push_back({iteration, "w_e", parts.total()});

        model.ridge_activations += stats.ridge_activations;
      } catch (const NumericalFailure& failure) {
        throw TrainingError(iteration, failure.what());
      }
      objective = parts.total();
    }

    if (!std::isfinite(objective))
      throw DivergenceError(iteration,
                            "objective is non-finite; reduce the learning "
                            "rate");
    model.trace.push_back(objective);
    model.completed_iterations = iteration;
  }
}

Model train(const TriModalDataset& dataset, const SemanticTable& table,
            const TrainConfig& cfg) {
  Model model = init_model(dataset, table, cfg);
  train_steps(model, dataset, table, cfg.hp.iters);
  return model;
}

namespace {

nlohmann::json network_manifest(const NetworkParams& params) {
  nlohmann::json j;
  j["seed"] = params.init_seed;
  std::vector<std::size_t> dims{params.input_dim()};
  std::vector<std::string> acts;
  for (const auto& layer : params.layers) {
    dims.push_back(layer.weight.rows());
    acts.push_back(activation_name(layer.activation));
  }
  j["dims"] = dims;
  j["activations"] = acts;
  return j;
}

void append_network_blocks(const NetworkParams& params,
                           const std::string& prefix,
                           std::vector<std::string>& names,
                           std::vector<Matrix>& blocks) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    names.push_back(prefix + ".w" + std::to_string(l));
    blocks.push_back(params.layers[l].weight);
    names.push_back(prefix + ".b" + std::to_string(l));
    Matrix bias(params.layers[l].bias.size(), 1);
    for (std::size_t i = 0; i < bias.rows(); ++i)
      bias(i, 0) = params.layers[l].bias[i];
    blocks.push_back(std::move(bias));
  }
}

NetworkParams network_from_blocks(const nlohmann::json& manifest,
                                  const std::string& prefix,
                                  const std::vector<std::string>& names,
                                  const std::vector<Matrix>& blocks) {
  NetworkParams params;
  params.init_seed = manifest.at("seed").get<std::uint64_t>();
  const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
  const auto acts =
      manifest.at("activations").get<std::vector<std::string>>();
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw FormatError("checkpoint: inconsistent manifest for " + prefix);

  const auto find_block = [&](const std::string& name) -> const Matrix& {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return blocks[i];
    throw FormatError("checkpoint: missing block '" + name + "'");
  };

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = find_block(prefix + ".w" + std::to_string(l));
    const Matrix& bias = find_block(prefix + ".b" + std::to_string(l));
    layer.bias.assign(bias.data(), bias.data() + bias.rows());
    layer.activation = activation_from_name(acts[l]);
    if (layer.weight.rows() != dims[l + 1] || layer.weight.cols() != dims[l])
      throw FormatError("checkpoint: block dims for " + prefix +
                        " disagree with its manifest");
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

}  // namespace

void save_checkpoint(const Model& model, const nlohmann::json& extra,
                     const std::string& path) {
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["seed"] = model.seed;
  manifest["ablation"] = ablation_name(model.ablation);
  manifest["strict_paper_gradients"] = model.strict_paper_gradients;
  manifest["hp"] = {{"a", model.hp.a},         {"b", model.hp.b},
                    {"c", model.hp.c},         {"beta", model.hp.beta},
                    {"lambda", model.hp.lambda}, {"d", model.hp.d},
                    {"lr", model.hp.lr},       {"batch", model.hp.batch},
                    {"iters", model.hp.iters}};
  manifest["completed_iterations"] = model.completed_iterations;
  if (model.has_initial_objective)
    manifest["initial_objective"] = model.initial_objective;
  else
    manifest["initial_objective"] = nullptr;
  manifest["trace"] = model.trace;
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& record : model.step_trace)
    steps.push_back({record.iteration, record.step, record.objective});
  manifest["step_trace"] = steps;
  manifest["ridge_activations"] = model.ridge_activations;
  manifest["networks"] = {{"theta_x", network_manifest(model.theta_x)},
                          {"theta_y", network_manifest(model.theta_y)},
                          {"theta_z", network_manifest(model.theta_z)}};
  manifest["extra"] = extra;

  std::vector<std::string> names;
  std::vector<Matrix> blocks;
  append_network_blocks(model.theta_x, "theta_x", names, blocks);
  append_network_blocks(model.theta_y, "theta_y", names, blocks);
  append_network_blocks(model.theta_z, "theta_z", names, blocks);
  if (model.sae.solved()) {
    const char* sae_names[4] = {"sae.w_f", "sae.w_h", "sae.w_g", "sae.w_e"};
    const Matrix* sae_blocks[4] = {&model.sae.w_f, &model.sae.w_h,
                                   &model.sae.w_g, &model.sae.w_e};
    for (int i = 0; i < 4; ++i) {
      names.emplace_back(sae_names[i]);
      blocks.push_back(*sae_blocks[i]);
    }
  }
  manifest["blocks"] = names;

  const std::string manifest_text = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out.write(kCheckpointMagic, 5);
  std::uint64_t length = manifest_text.size();
  char length_bytes[8];
  for (int i = 0; i < 8; ++i)
    length_bytes[i] = static_cast<char>((length >> (8 * i)) & 0xff);
  out.write(length_bytes, 8);
  out.write(manifest_text.data(),
            static_cast<std::streamsize>(manifest_text.size()));
  for (const Matrix& block : blocks) {
    const auto bytes = encode_fmx(block);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw FormatError("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

  if (bytes.size() < 5 || std::memcmp(bytes.data(), kCheckpointMagic, 5) != 0)
    throw FormatError("bad magic at offset 0 (expected \"DVFN1\")");
  if (bytes.size() < 13)
    throw FormatError("truncated header at offset " +
                      std::to_string(bytes.size()));
  std::uint64_t manifest_length = 0;
  for (int i = 0; i < 8; ++i)
    manifest_length |= static_cast<std::uint64_t>(
                           static_cast<unsigned char>(bytes[5 + i]))
                       << (8 * i);
  if (bytes.size() < 13 + manifest_length)
    throw FormatError("truncated manifest at offset " +
                      std::to_string(bytes.size()) + " (expected " +
                      std::to_string(13 + manifest_length) + " bytes)");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.data() + 13,
                                     bytes.data() + 13 + manifest_length);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest JSON at offset 13: ") +
                      e.what());
  }

  Checkpoint result;
  Model& model = result.model;
  try {
    if (manifest.at("version").get<int>() != 1)
      throw FormatError("unsupported checkpoint version");
    model.seed = manifest.at("seed").get<std::uint64_t>();
    model.ablation =
        ablation_from_name(manifest.at("ablation").get<std::string>());
    model.strict_paper_gradients =
        manifest.at("strict_paper_gradients").get<bool>();
    const auto& hp = manifest.at("hp");
    model.hp.a = hp.at("a").get<double>();
    model.hp.b = hp.at("b").get<double>();
    model.hp.c = hp.at("c").get<double>();
    model.hp.beta = hp.at("beta").get<double>();
    model.hp.lambda = hp.at("lambda").get<double>();
    model.hp.d = hp.at("d").get<std::size_t>();
    model.hp.lr = hp.at("lr").get<double>();
    model.hp.batch = hp.at("batch").get<std::size_t>();
    model.hp.iters = hp.at("iters").get<std::size_t>();
    model.completed_iterations =
        manifest.at("completed_iterations").get<std::size_t>();
    if (!manifest.at("initial_objective").is_null()) {
      model.initial_objective =
          manifest.at("initial_objective").get<double>();
      model.has_initial_objective = true;
    }
    model.trace = manifest.at("trace").get<std::vector<double>>();
    for (const auto& entry : manifest.at("step_trace"))
      model.step_trace.push_back({entry.at(0).get<std::size_t>(),
                                  entry.at(1).get<std::string>(),
                                  entry.at(2).get<double>()});
    model.ridge_activations = manifest.at("ridge_activations").get<int>();
    result.extra = manifest.at("extra");

    const auto names =
        manifest.at("blocks").get<std::vector<std::string>>();
    std::vector<Matrix> blocks;
    std::size_t offset = 13 + static_cast<std::size_t>(manifest_length);
    for (std::size_t i = 0; i < names.size(); ++i) {
      Matrix block = decode_fmx(
          reinterpret_cast<const std::uint8_t*>(bytes.data()) + offset,
          bytes.size() - offset, offset);
      offset += 20 + 8 * block.size();
      blocks.push_back(std::move(block));
    }
    if (offset != bytes.size())
      throw FormatError("trailing bytes at offset " + std::to_string(offset));

    const auto& nets = manifest.at("networks");
    model.theta_x =
        network_from_blocks(nets.at("theta_x"), "theta_x", names, blocks);
    model.theta_y =
        network_from_blocks(nets.at("theta_y"), "theta_y", names, blocks);
    model.theta_z =
        network_from_blocks(nets.at("theta_z"), "theta_z", names, blocks);

    const auto find_optional = [&](const std::string& name) -> Matrix {
      for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return blocks[i];
      return Matrix();
    };
    model.sae.w_f = find_optional("sae.w_f");
    model.sae.w_h = find_optional("sae.w_h");
    model.sae.w_g = find_optional("sae.w_g");
    model.sae.w_e = find_optional("sae.w_e");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad manifest field: ") + e.what());
  }
  return result;
}

}  // namespace divafn
