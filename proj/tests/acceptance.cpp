// Acceptance suite: one pass/fail line per criterion.
// Usage: divafn_acceptance [criterion-number]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "divafn/cli.hpp"
#include "divafn/fmx.hpp"
#include "divafn/fusionclassify.hpp"
#include "divafn/gradcheck.hpp"
#include "divafn/rng.hpp"
#include "divafn/sylvester.hpp"
#include "divafn/trainer.hpp"

using namespace divafn;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

SynthConfig calibrated_synth() {
  SynthConfig cfg;  // the struct defaults are the calibrated desk-scale set
  cfg.classes = 8;
  cfg.samples_per_class = 40;
  return cfg;
}

struct SplitRun {
  double heldout_accuracy = 0.0;
  double baseline_video_accuracy = 0.0;
};

SplitRun evaluate_mode(const SynthResult& data, Ablation mode,
                       std::uint64_t seed, double ratio) {
  const auto train_cols =
      stratified_subset(data.dataset.labels, ratio, seed);
  std::vector<std::size_t> heldout_cols;
  {
    std::vector<bool> in_train(data.dataset.sample_count(), false);
    for (std::size_t c : train_cols) in_train[c] = true;
    for (std::size_t c = 0; c < data.dataset.sample_count(); ++c)
      if (!in_train[c]) heldout_cols.push_back(c);
  }
  const TriModalDataset train_split = data.dataset.subset(train_cols);

  TrainConfig cfg;
  cfg.ablation = mode;
  cfg.seed = seed;
  const Model model = train(train_split, data.semantics, cfg);

  const FusedBatch fused =
      fuse(model, data.dataset.keyframes, data.dataset.videos);
  std::vector<int> train_labels, heldout_labels;
  for (std::size_t c : train_cols) train_labels.push_back(data.dataset.labels[c]);
  for (std::size_t c : heldout_cols)
    heldout_labels.push_back(data.dataset.labels[c]);

  const LinearClassifier clf = train_classifier(
      FusedBatch{select_columns(fused.features, train_cols)}, train_labels,
      data.dataset.class_count(), 1.0, seed);

  SplitRun run;
  run.heldout_accuracy =
      evaluate(clf, FusedBatch{select_columns(fused.features, heldout_cols)},
               heldout_labels)
          .accuracy;

  const LinearClassifier video_clf = train_classifier(
      FusedBatch{select_columns(data.dataset.videos, train_cols)},
      train_labels, data.dataset.class_count(), 1.0, seed);
  run.baseline_video_accuracy =
      evaluate(video_clf,
               FusedBatch{select_columns(data.dataset.videos, heldout_cols)},
               heldout_labels)
          .accuracy;
  return run;
}

Outcome criterion_1_gradient_fidelity() {
  const auto start = Clock::now();
  const int exit_code = run_cli({"gradcheck"});
  const Hyperparams hp;  // library-level detail for the report line
  const GradCheckResult result = run_gradcheck(hp, 7);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  std::ostringstream detail;
  detail << "gradcheck exit " << exit_code << ", worst relative error "
         << result.worst_rel_error << " at " << result.worst_coordinate
         << " across " << result.entries.size() << " checks in " << elapsed
         << " s";
  return {exit_code == 0 && result.pass && elapsed < 5.0, detail.str()};
}

Outcome criterion_2_sylvester() {
  const auto start = Clock::now();
  double worst_residual = 0.0, worst_gap = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(static_cast<std::uint64_t>(1000 + trial));
    const std::size_t k = 2 + static_cast<std::size_t>(rng.below(7));   // <= 8
    const std::size_t d = 4 + static_cast<std::size_t>(rng.below(61));  // <= 64
    const Matrix s = Matrix::gaussian(k, k + 4, rng);
    const Matrix f = Matrix::gaussian(d, d + 4, rng);
    const Matrix a = 0.1 * multiply_a_bt(s, s);
    const Matrix b = 0.01 * multiply_a_bt(f, f);
    const Matrix c = Matrix::gaussian(k, d, rng);
    const Matrix w = solve_sylvester(a, b, c);
    worst_residual = std::max(worst_residual, sylvester_residual(a, b, c, w));
    worst_gap = std::max(worst_gap, max_abs_diff(w, sylvester_oracle(a, b, c)));
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  std::ostringstream detail;
  detail << "20 instances: worst relative residual " << worst_residual
         << ", worst oracle disagreement " << worst_gap << " in " << elapsed
         << " s";
  return {worst_residual <= 1e-8 && worst_gap <= 1e-8 && elapsed < 5.0,
          detail.str()};
}

Outcome criterion_3_substep_optimality() {
  const auto start = Clock::now();
  const SynthResult data = generate_synthetic(calibrated_synth(), 7);
  TrainConfig cfg;
  cfg.seed = 7;
  cfg.hp.iters = 30;
  const Model model = train(data.dataset, data.semantics, cfg);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  std::size_t violations = 0;
  double worst_increase = 0.0;
  double before = 0.0;
  for (const auto& record : model.step_trace) {
    if (record.step == "pre_solves") {
      before = record.objective;
      continue;
    }
    const double increase = record.objective - before;
    if (increase > 1e-9) {
      ++violations;
      worst_increase = std::max(worst_increase, increase);
    }
    before = record.objective;
  }
  std::ostringstream detail;
  detail << model.step_trace.size() << " recorded sub-steps over 30 "
         << "iterations, " << violations
         << " monotonicity violations (worst increase " << worst_increase
         << ") in " << elapsed << " s";
  return {violations == 0 && model.step_trace.size() == 30 * 5 &&
              elapsed < 60.0,
          detail.str()};
}

Outcome criterion_4_adaptation_gain() {
  const auto start = Clock::now();
  double model_sum = 0.0, baseline_sum = 0.0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthResult data = generate_synthetic(calibrated_synth(), seed);
    const SplitRun run = evaluate_mode(data, Ablation::Full, seed, 0.1);
    model_sum += run.heldout_accuracy;
    baseline_sum += run.baseline_video_accuracy;
    per_seed << " [seed " << seed << ": " << run.heldout_accuracy << " vs "
             << run.baseline_video_accuracy << "]";
  }
  const double mean_model = model_sum / 5.0;
  const double mean_baseline = baseline_sum / 5.0;
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  std::ostringstream detail;
  detail << "mean held-out accuracy " << mean_model
         << " vs video-only baseline " << mean_baseline << " (gain "
         << (mean_model - mean_baseline) * 100.0 << " points)"
         << per_seed.str() << " in " << elapsed << " s";
  return {mean_model - mean_baseline >= 0.05 && elapsed < 600.0,
          detail.str()};
}

Outcome criterion_5_ablation_ordering() {
  const auto start = Clock::now();
  double sums[4] = {0.0, 0.0, 0.0, 0.0};
  const Ablation modes[4] = {Ablation::Full, Ablation::DIVA, Ablation::DIVF,
                             Ablation::KVC};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthResult data = generate_synthetic(calibrated_synth(), seed);
    for (int m = 0; m < 4; ++m)
      sums[m] += evaluate_mode(data, modes[m], seed, 0.1).heldout_accuracy;
  }
  const double full = sums[0] / 5.0, diva = sums[1] / 5.0,
               divf = sums[2] / 5.0, kvc = sums[3] / 5.0;
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  const bool best = full >= std::max(diva, divf);
  const bool floor = std::min(diva, divf) >= kvc - 0.02;
  std::ostringstream detail;
  detail << "mean held-out accuracies: full " << full << ", DIVA " << diva
         << ", DIVF " << divf << ", KVC " << kvc << " in " << elapsed << " s";
  return {best && floor && elapsed < 1800.0, detail.str()};
}

Outcome criterion_6_determinism() {
  const fs::path dir = fs::temp_directory_path() / "divafn_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const nlohmann::json config{
      {"synth",
       {{"classes", 3},
        {"samples_per_class", 8},
        {"dim_image", 12},
        {"dim_keyframe", 12},
        {"dim_video", 16},
        {"dim_semantic", 4},
        {"latent_dim", 4},
        {"seed", 3}}},
      {"hyperparams", {{"d", 6}, {"batch", 8}, {"iters", 5}, {"lr", 1e-3}}},
      {"train", {{"seed", 11}, {"ratio", 0.5}}}};
  const std::string config_path = (dir / "config.json").string();
  std::ofstream(config_path) << config.dump(2);

  const std::string data_dir = (dir / "data").string();
  if (run_cli({"synth", "--config", config_path, "--out", data_dir}) != 0)
    return {false, "synth command failed"};

  nlohmann::json reports[2];
  for (int i = 0; i < 2; ++i) {
    const std::string out = (dir / ("run" + std::to_string(i))).string();
    if (run_cli({"train", "--data", data_dir, "--config", config_path,
                 "--out", out}) != 0)
      return {false, "train command failed"};
    std::ifstream in(fs::path(out) / "report.json");
    in >> reports[i];
    reports[i].erase("timings");
  }
  const bool identical = reports[0].dump() == reports[1].dump();
  return {identical, identical
                         ? "two runs produced bit-identical reports "
                           "(timings excluded)"
                         : "reports differ"};
}

Outcome criterion_7_format_round_trips() {
  const fs::path dir = fs::temp_directory_path() / "divafn_acceptance_fmt";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const auto file_bytes = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };

  std::size_t failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(static_cast<std::uint64_t>(9000 + trial));
    const Matrix m =
        Matrix::gaussian(1 + rng.below(20), 1 + rng.below(20), rng);
    const std::string path_a = (dir / "a.fmx").string();
    const std::string path_b = (dir / "b.fmx").string();
    save_fmx(m, path_a);
    const Matrix back = load_fmx(path_a);
    save_fmx(back, path_b);
    if (!exactly_equal(m, back) || file_bytes(path_a) != file_bytes(path_b))
      ++failures;
  }

  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(static_cast<std::uint64_t>(9500 + trial));
    Model model;
    const std::size_t d = 2 + rng.below(6);
    const std::size_t k = 2 + rng.below(4);
    const std::vector<Activation> acts{Activation::Rectifier,
                                       Activation::Identity};
    model.theta_x = init_params({3 + rng.below(5), d, d}, acts, rng.next_u64());
    model.theta_y = init_params({3 + rng.below(5), d, d}, acts, rng.next_u64());
    model.theta_z = init_params({3 + rng.below(5), d, d}, acts, rng.next_u64());
    model.sae.w_f = Matrix::gaussian(k, d, rng);
    model.sae.w_h = Matrix::gaussian(k, d, rng);
    model.sae.w_g = Matrix::gaussian(k, d, rng);
    model.sae.w_e = Matrix::gaussian(k, 2 * d, rng);
    model.seed = rng.next_u64();
    model.completed_iterations = rng.below(40);
    model.has_initial_objective = true;
    model.initial_objective = rng.gaussian() * 100.0;
    for (int i = 0; i < 5; ++i) model.trace.push_back(rng.gaussian());
    model.step_trace.push_back({1, "w_f", rng.gaussian()});
    model.ridge_activations = static_cast<int>(rng.below(3));

    const std::string path_a = (dir / "a.dvfn").string();
    const std::string path_b = (dir / "b.dvfn").string();
    save_checkpoint(model, {{"trial", trial}}, path_a);
    const Checkpoint restored = load_checkpoint(path_a);
    save_checkpoint(restored.model, restored.extra, path_b);
    if (file_bytes(path_a) != file_bytes(path_b)) ++failures;
    if (restored.model.trace != model.trace ||
        !exactly_equal(restored.model.sae.w_e, model.sae.w_e))
      ++failures;
  }

  std::ostringstream detail;
  detail << "50 FMX1 + 50 DVFN1 randomized round trips, " << failures
         << " failures";
  return {failures == 0, detail.str()};
}

Outcome criterion_8_objective_decrease() {
  const auto start = Clock::now();
  const SynthResult data = generate_synthetic(calibrated_synth(), 7);
  TrainConfig cfg;
  cfg.seed = 7;  // defaults: 100 iterations
  const Model model = train(data.dataset, data.semantics, cfg);
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();

  bool finite = std::isfinite(model.initial_objective);
  for (double value : model.trace) finite = finite && std::isfinite(value);
  const double final_objective =
      model.trace.empty() ? model.initial_objective : model.trace.back();
  const double drop =
      1.0 - final_objective / model.initial_objective;

  std::ostringstream detail;
  detail << "objective " << model.initial_objective << " -> "
         << final_objective << " (" << drop * 100.0 << "% decrease) over "
         << model.trace.size() << " iterations in " << elapsed << " s";
  return {finite && model.trace.size() == 100 && drop >= 0.5, detail.str()};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient fidelity", criterion_1_gradient_fidelity},
      {2, "Sylvester correctness", criterion_2_sylvester},
      {3, "closed-form sub-step optimality", criterion_3_substep_optimality},
      {4, "adaptation gain over video-only baseline",
       criterion_4_adaptation_gain},
      {5, "ablation ordering", criterion_5_ablation_ordering},
      {6, "report determinism", criterion_6_determinism},
      {7, "format round trips", criterion_7_format_round_trips},
      {8, "objective decrease", criterion_8_objective_decrease},
  };

  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& criterion : criteria) {
    if (selected != 0 && criterion.number != selected) continue;
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion "
              << criterion.number << ": " << criterion.name << " — "
              << outcome.detail << "\n";
    if (!outcome.pass) ++failures;
  }
  return failures;
}
