#ifndef DIVAFN_FEATNETS_HPP
#define DIVAFN_FEATNETS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "divafn/matrix.hpp"

namespace divafn {

enum class Activation { Rectifier, Identity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // length out
  Activation activation = Activation::Identity;
};

/// Small feedforward network producing the shared d-dimensional
/// representation of one modality. The final layer is always Identity.
struct NetworkParams {
  std::vector<DenseLayer> layers;
  std::uint64_t init_seed = 0;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  void validate() const;
  bool finite() const;
};

/// dims = [input, hidden..., output]; one activation tag per layer.
/// Weights are zero-mean Gaussian with standard deviation 1/sqrt(fan-in),
/// biases zero.
NetworkParams init_params(const std::vector<std::size_t>& dims,
                          const std::vector<Activation>& activations,
                          std::uint64_t seed);

/// Affine + activation composition over all columns of `inputs`.
Matrix forward(const NetworkParams& params, const Matrix& inputs);

/// One SGD step from the given d x n_batch objective gradient at the network
/// outputs: parameter gradients are accumulated over the batch by
/// backpropagation and applied as theta <- theta - lr * grad.
NetworkParams backward_update(const NetworkParams& params,
                              const Matrix& batch_inputs,
                              const Matrix& output_grad, double lr);

// Parameter checkpoint: <name>.json manifest (layer dims, activation tags,
// seed) next to one FMX1 file per weight matrix and bias vector.
void save_network(const NetworkParams& params, const std::string& dir,
                  const std::string& name);
NetworkParams load_network(const std::string& dir, const std::string& name);

}  // namespace divafn

#endif  // DIVAFN_FEATNETS_HPP
