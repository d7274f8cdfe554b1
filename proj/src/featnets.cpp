#include "divafn/featnets.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "divafn/fmx.hpp"
#include "divafn/rng.hpp"

namespace divafn {

std::string activation_name(Activation a) {
  return a == Activation::Rectifier ? "rectifier" : "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "rectifier") return Activation::Rectifier;
  if (name == "identity") return Activation::Identity;
  throw FormatError("unknown activation tag '" + name + "'");
}

std::size_t NetworkParams::input_dim() const {
  if (layers.empty()) throw ContractViolation("network has no layers");
  return layers.front().weight.cols();
}

std::size_t NetworkParams::output_dim() const {
  if (layers.empty()) throw ContractViolation("network has no layers");
  return layers.back().weight.rows();
}

void NetworkParams::validate() const {
  if (layers.empty()) throw ContractViolation("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.empty())
      throw ContractViolation("layer " + std::to_string(l) +
                              ": empty weight");
    if (layer.bias.size() != layer.weight.rows())
      throw ContractViolation("layer " + std::to_string(l) +
                              ": bias length " +
                              std::to_string(layer.bias.size()) +
                              " != output dim " +
                              std::to_string(layer.weight.rows()));
    if (l > 0 && layer.weight.cols() != layers[l - 1].weight.rows())
      throw ContractViolation("layer " + std::to_string(l) +
                              ": input dim does not chain with layer " +
                              std::to_string(l - 1));
  }
  if (layers.back().activation != Activation::Identity)
    throw ContractViolation("final layer must use the identity activation");
}

bool NetworkParams::finite() const {
  for (const auto& layer : layers) {
    if (!all_finite(layer.weight)) return false;
    for (double b : layer.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

NetworkParams init_params(const std::vector<std::size_t>& dims,
                          const std::vector<Activation>& activations,
                          std::uint64_t seed) {
  if (dims.size() < 2)
    throw ContractViolation("init_params: need at least one layer");
  if (activations.size() != dims.size() - 1)
    throw ContractViolation("init_params: activation count " +
                            std::to_string(activations.size()) +
                            " != layer count " +
                            std::to_string(dims.size() - 1));
  Rng rng(seed);
  NetworkParams params;
  params.init_seed = seed;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(dims[l + 1], dims[l]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (std::size_t i = 0; i < layer.weight.size(); ++i)
      layer.weight.data()[i] = scale * rng.gaussian();
    layer.bias.assign(dims[l + 1], 0.0);
    layer.activation = activations[l];
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

namespace {

Matrix apply_layer(const DenseLayer& layer, const Matrix& input,
                   Matrix* preactivation) {
  Matrix z = layer.weight * input;
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double* zj = z.col(j);
    for (std::size_t i = 0; i < z.rows(); ++i) zj[i] += layer.bias[i];
  }
  if (preactivation) *preactivation = z;
  if (layer.activation == Activation::Rectifier)
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z.data()[i] < 0.0) z.data()[i] = 0.0;
  return z;
}

}  // namespace

Matrix forward(const NetworkParams& params, const Matrix& inputs) {
  params.validate();
  if (inputs.rows() != params.input_dim())
    throw ContractViolation("forward: input rows " +
                            std::to_string(inputs.rows()) +
                            " != network input dim " +
                            std::to_string(params.input_dim()));
  Matrix current = inputs;
  for (const auto& layer : params.layers)
    current = apply_layer(layer, current, nullptr);
  return current;
}

NetworkParams backward_update(const NetworkParams& params,
                              const Matrix& batch_inputs,
                              const Matrix& output_grad, double lr) {
  params.validate();
  if (batch_inputs.rows() != params.input_dim())
    throw ContractViolation("backward_update: input rows " +
                            std::to_string(batch_inputs.rows()) +
                            " != network input dim " +
                            std::to_string(params.input_dim()));
  if (output_grad.rows() != params.output_dim() ||
      output_grad.cols() != batch_inputs.cols())
    throw ContractViolation(
        "backward_update: gradient must be " +
        std::to_string(params.output_dim()) + "x" +
        std::to_string(batch_inputs.cols()) + ", got " +
        std::to_string(output_grad.rows()) + "x" +
        std::to_string(output_grad.cols()));
  if (lr < 0.0) throw ContractViolation("backward_update: negative lr");

  const std::size_t depth = params.layers.size();
  std::vector<Matrix> activations(depth + 1);
  std::vector<Matrix> preacts(depth);
  activations[0] = batch_inputs;
  for (std::size_t l = 0; l < depth; ++l)
    activations[l + 1] =
        apply_layer(params.layers[l], activations[l], &preacts[l]);

  NetworkParams updated = params;
  Matrix grad = output_grad;
  for (std::size_t l = depth; l-- > 0;) {
    if (params.layers[l].activation == Activation::Rectifier) {
      // Rectifier gate: derivative is 0 at negative and exactly-zero
      // preactivations, 1 at positive ones.
      for (std::size_t i = 0; i < grad.size(); ++i)
        if (preacts[l].data()[i] <= 0.0) grad.data()[i] = 0.0;
    }
    const Matrix weight_grad = multiply_a_bt(grad, activations[l]);
    std::vector<double> bias_grad(grad.rows(), 0.0);
    for (std::size_t j = 0; j < grad.cols(); ++j) {
      const double* gj = grad.col(j);
      for (std::size_t i = 0; i < grad.rows(); ++i) bias_grad[i] += gj[i];
    }
    if (l > 0) grad = multiply_at_b(params.layers[l].weight, grad);

    add_in_place(updated.layers[l].weight, weight_grad, -lr);
    for (std::size_t i = 0; i < bias_grad.size(); ++i)
      updated.layers[l].bias[i] -= lr * bias_grad[i];
  }
  return updated;
}

void save_network(const NetworkParams& params, const std::string& dir,
                  const std::string& name) {
  params.validate();
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  nlohmann::json manifest;
  manifest["seed"] = params.init_seed;
  std::vector<std::size_t> dims{params.input_dim()};
  std::vector<std::string> acts;
  for (const auto& layer : params.layers) {
    dims.push_back(layer.weight.rows());
    acts.push_back(activation_name(layer.activation));
  }
  manifest["dims"] = dims;
  manifest["activations"] = acts;

  std::ofstream out(base / (name + ".json"), std::ios::trunc);
  if (!out)
    throw FormatError("cannot write network manifest for '" + name + "'");
  out << manifest.dump(2) << '\n';

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    save_fmx(params.layers[l].weight,
             (base / (name + "_w" + std::to_string(l) + ".fmx")).string());
    Matrix bias(params.layers[l].bias.size(), 1);
    for (std::size_t i = 0; i < bias.rows(); ++i)
      bias(i, 0) = params.layers[l].bias[i];
    save_fmx(bias,
             (base / (name + "_b" + std::to_string(l) + ".fmx")).string());
  }
}

NetworkParams load_network(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  std::ifstream in(base / (name + ".json"));
  if (!in) throw FormatError("cannot open network manifest for '" + name +
                             "' in '" + dir + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad network manifest for '" + name +
                      "': " + e.what());
  }

  NetworkParams params;
  params.init_seed = manifest.at("seed").get<std::uint64_t>();
  const auto dims = manifest.at("dims").get<std::vector<std::size_t>>();
  const auto acts =
      manifest.at("activations").get<std::vector<std::string>>();
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw FormatError("inconsistent network manifest for '" + name + "'");

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight =
        load_fmx((base / (name + "_w" + std::to_string(l) + ".fmx")).string());
    Matrix bias =
        load_fmx((base / (name + "_b" + std::to_string(l) + ".fmx")).string());
    layer.bias.assign(bias.data(), bias.data() + bias.rows());
    layer.activation = activation_from_name(acts[l]);
    if (layer.weight.rows() != dims[l + 1] || layer.weight.cols() != dims[l])
      throw FormatError("network block " + std::to_string(l) + " of '" +
                        name + "' does not match its manifest dims");
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

}  // namespace divafn
