#ifndef DIVAFN_TRAINER_HPP
#define DIVAFN_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "divafn/datamodel.hpp"
#include "divafn/featnets.hpp"
#include "divafn/objective.hpp"
#include "divafn/saesolver.hpp"

namespace divafn {

/// Training variants: Full runs everything; DIVA drops the autoencoders
/// (beta = lambda = 0, no closed-form solves); DIVF freezes the three
/// networks at their initialization and runs only the closed-form solves;
/// KVC skips training entirely and classifies raw concatenated features.
enum class Ablation { Full, DIVA, DIVF, KVC };

std::string ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct TrainConfig {
  Hyperparams hp;
  Ablation ablation = Ablation::Full;
  std::uint64_t seed = 0;
  std::size_t checkpoint_interval = 0;  // 0 = only at the end
  bool strict_paper_gradients = false;
};

/// Objective value recorded around one closed-form sub-step.
struct StepRecord {
  std::size_t iteration = 0;  // 1-based
  std::string step;           // pre_solves, w_f, w_h, w_g, w_e
  double objective = 0.0;
};

struct Model {
  NetworkParams theta_x;  // image network
  NetworkParams theta_y;  // keyframe network
  NetworkParams theta_z;  // video network
  SaeWeights sae;
  Hyperparams hp;
  Ablation ablation = Ablation::Full;
  bool strict_paper_gradients = false;
  std::uint64_t seed = 0;
  std::size_t completed_iterations = 0;
  bool has_initial_objective = false;
  double initial_objective = 0.0;
  std::vector<double> trace;  // objective after each completed iteration
  std::vector<StepRecord> step_trace;
  int ridge_activations = 0;

  std::size_t representation_dim() const { return theta_y.output_dim(); }
};

/// Networks (two dense layers each, rectifier then identity) seeded from
/// cfg.seed; autoencoder weights start at zero for the solving modes.
Model init_model(const TriModalDataset& dataset, const SemanticTable& table,
                 const TrainConfig& cfg);

/// Runs `additional_iterations` more outer iterations. Each iteration runs
/// one seeded-shuffle SGD epoch per network (skipped under DIVF) followed by
/// the four closed-form autoencoder solves (skipped under DIVA); KVC returns
/// immediately. Deterministic per (model.seed, completed_iterations), so a
/// restored checkpoint resumes to the identical trace.
void train_steps(Model& model, const TriModalDataset& dataset,
                 const SemanticTable& table,
                 std::size_t additional_iterations);

Model train(const TriModalDataset& dataset, const SemanticTable& table,
            const TrainConfig& cfg);

// DVFN1 checkpoint: 5-byte magic "DVFN1", manifest length (unsigned 64-bit
// little-endian), JSON manifest, then the FMX1 blocks the manifest lists.
// Round trips are bit-exact. `extra` is persisted verbatim for callers.

struct Checkpoint {
  Model model;
  nlohmann::json extra;
};

void save_checkpoint(const Model& model, const nlohmann::json& extra,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace divafn

#endif  // DIVAFN_TRAINER_HPP
