#include "divafn/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"

#include "divafn/config.hpp"
#include "divafn/datamodel.hpp"
#include "divafn/fusionclassify.hpp"
#include "divafn/gradcheck.hpp"
#include "divafn/trainer.hpp"

namespace divafn {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

struct SplitAccuracies {
  std::vector<std::size_t> train_columns;
  std::vector<std::size_t> heldout_columns;
  Metrics train_metrics;
  std::optional<Metrics> heldout_metrics;
  std::optional<double> baseline_video_heldout;
  std::vector<std::string> warnings;
};

std::vector<int> labels_at(const std::vector<int>& labels,
                           const std::vector<std::size_t>& columns) {
  std::vector<int> out;
  out.reserve(columns.size());
  for (std::size_t c : columns) out.push_back(labels[c]);
  return out;
}

/// Fuses the whole dataset through the model, fits the classifier on the
/// training columns and scores both splits. Also fits the video-feature-only
/// reference classifier on the same split for comparison.
SplitAccuracies split_accuracies(const Model& model,
                                 const TriModalDataset& dataset,
                                 const std::vector<std::size_t>& train_columns,
                                 double reg, std::uint64_t seed) {
  SplitAccuracies out;
  out.train_columns = train_columns;
  std::vector<bool> in_train(dataset.sample_count(), false);
  for (std::size_t c : train_columns) in_train[c] = true;
  for (std::size_t c = 0; c < dataset.sample_count(); ++c)
    if (!in_train[c]) out.heldout_columns.push_back(c);

  const FusedBatch fused = fuse(model, dataset.keyframes, dataset.videos);
  const std::vector<int> train_labels =
      labels_at(dataset.labels, train_columns);
  const LinearClassifier clf = train_classifier(
      FusedBatch{select_columns(fused.features, train_columns)}, train_labels,
      dataset.class_count(), reg, seed);
  out.train_metrics =
      evaluate(clf, FusedBatch{select_columns(fused.features, train_columns)},
               train_labels);

  if (!out.heldout_columns.empty()) {
    const std::vector<int> heldout_labels =
        labels_at(dataset.labels, out.heldout_columns);
    out.heldout_metrics = evaluate(
        clf, FusedBatch{select_columns(fused.features, out.heldout_columns)},
        heldout_labels);

    std::set<int> train_classes(train_labels.begin(), train_labels.end());
    std::set<int> missing;
    for (int label : heldout_labels)
      if (!train_classes.count(label)) missing.insert(label);
    for (int label : missing)
      out.warnings.push_back("class " + std::to_string(label) +
                             " ('" +
                             dataset.class_names[static_cast<std::size_t>(
                                 label)] +
                             "') present in evaluation but absent in "
                             "training; scored as-is");

    const LinearClassifier video_clf =
        train_classifier(FusedBatch{select_columns(dataset.videos,
                                                   train_columns)},
                         train_labels, dataset.class_count(), reg, seed);
    out.baseline_video_heldout =
        evaluate(video_clf,
                 FusedBatch{select_columns(dataset.videos,
                                           out.heldout_columns)},
                 heldout_labels)
            .accuracy;
  }
  return out;
}

nlohmann::json step_trace_json(const Model& model) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& record : model.step_trace)
    steps.push_back({record.iteration, record.step, record.objective});
  return steps;
}

struct TrainedJob {
  Model model;
  SplitAccuracies accuracies;
  double train_seconds = 0.0;
};

TrainedJob run_training_job(const SynthResult& data, const AppConfig& cfg,
                            const std::string& checkpoint_path) {
  const std::vector<std::size_t> train_columns =
      stratified_subset(data.dataset.labels, cfg.ratio, cfg.train_seed);
  const TriModalDataset train_split = data.dataset.subset(train_columns);

  TrainConfig tc;
  tc.hp = cfg.hp;
  tc.ablation = cfg.ablation;
  tc.seed = cfg.train_seed;
  tc.checkpoint_interval = cfg.checkpoint_interval;
  tc.strict_paper_gradients = cfg.strict_paper_gradients;

  nlohmann::json extra;
  extra["train_columns"] = train_columns;
  extra["ratio"] = cfg.ratio;
  extra["classifier_reg"] = cfg.classifier_reg;

  const auto start = Clock::now();
  TrainedJob job;
  job.model = init_model(train_split, data.semantics, tc);
  train_steps(job.model, train_split, data.semantics, 0);
  std::size_t done = 0;
  const std::size_t interval =
      tc.checkpoint_interval == 0 ? tc.hp.iters : tc.checkpoint_interval;
  while (done < tc.hp.iters) {
    const std::size_t chunk = std::min(interval, tc.hp.iters - done);
    train_steps(job.model, train_split, data.semantics, chunk);
    done += chunk;
    if (!checkpoint_path.empty() && done < tc.hp.iters)
      save_checkpoint(job.model, extra, checkpoint_path);
  }
  job.train_seconds = seconds_since(start);

  if (!checkpoint_path.empty())
    save_checkpoint(job.model, extra, checkpoint_path);
  job.accuracies = split_accuracies(job.model, data.dataset, train_columns,
                                    cfg.classifier_reg, cfg.train_seed);
  return job;
}

nlohmann::json job_report(const AppConfig& cfg, const TrainedJob& job,
                          double total_seconds) {
  const Model& model = job.model;
  nlohmann::json report;
  report["command"] = "train";
  report["config"] = cfg.to_json();
  report["seed"] = model.seed;
  report["ablation"] = ablation_name(model.ablation);
  report["ratio"] = cfg.ratio;
  report["train_columns"] = job.accuracies.train_columns;
  if (model.has_initial_objective)
    report["initial_objective"] = model.initial_objective;
  else
    report["initial_objective"] = nullptr;
  if (!model.trace.empty())
    report["final_objective"] = model.trace.back();
  else
    report["final_objective"] = nullptr;
  report["trace"] = model.trace;
  report["step_trace"] = step_trace_json(model);
  report["ridge_fallback_activations"] = model.ridge_activations;

  nlohmann::json accuracy;
  accuracy["train"] = job.accuracies.train_metrics.accuracy;
  if (job.accuracies.heldout_metrics)
    accuracy["heldout"] = job.accuracies.heldout_metrics->accuracy;
  else
    accuracy["heldout"] = nullptr;
  if (job.accuracies.baseline_video_heldout)
    accuracy["baseline_video_heldout"] = *job.accuracies.baseline_video_heldout;
  else
    accuracy["baseline_video_heldout"] = nullptr;
  report["accuracy"] = accuracy;
  report["warnings"] = job.accuracies.warnings;

  report["timings"] = {{"train_seconds", job.train_seconds},
                       {"total_seconds", total_seconds}};
  return report;
}

int cmd_synth(const AppConfig& cfg, const std::string& out_dir) {
  if (!cfg.has_classes)
    throw ConfigError("missing required config field 'synth.classes'");
  if (!cfg.has_samples_per_class)
    throw ConfigError(
        "missing required config field 'synth.samples_per_class'");
  const SynthResult result = generate_synthetic(cfg.synth, cfg.synth_seed);
  save_dataset(result.dataset, result.semantics, out_dir);
  std::cout << "synth: wrote " << result.dataset.sample_count()
            << " samples across " << result.dataset.class_count()
            << " classes (seed " << cfg.synth_seed << ") to " << out_dir
            << "\n";
  return 0;
}

int cmd_train(const AppConfig& cfg, const std::string& data_dir,
              const std::string& out_dir) {
  const auto start = Clock::now();
  const SynthResult data = load_dataset(data_dir);
  fs::create_directories(out_dir);
  const std::string checkpoint_path =
      (fs::path(out_dir) / "checkpoint.dvfn").string();

  const TrainedJob job = run_training_job(data, cfg, checkpoint_path);
  const nlohmann::json report =
      job_report(cfg, job, seconds_since(start));
  write_json(report, (fs::path(out_dir) / "report.json").string());

  std::cout << "train: " << ablation_name(job.model.ablation) << " ran "
            << job.model.completed_iterations << " iterations";
  if (job.model.has_initial_objective && !job.model.trace.empty())
    std::cout << ", objective " << job.model.initial_objective << " -> "
              << job.model.trace.back();
  std::cout << "; train accuracy " << job.accuracies.train_metrics.accuracy;
  if (job.accuracies.heldout_metrics)
    std::cout << ", held-out accuracy "
              << job.accuracies.heldout_metrics->accuracy;
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& out_path) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const SynthResult data = load_dataset(data_dir);

  std::vector<std::size_t> train_columns;
  if (checkpoint.extra.contains("train_columns"))
    train_columns =
        checkpoint.extra["train_columns"].get<std::vector<std::size_t>>();
  else
    for (std::size_t c = 0; c < data.dataset.sample_count(); ++c)
      train_columns.push_back(c);
  for (std::size_t c : train_columns)
    if (c >= data.dataset.sample_count())
      throw ContractViolation("eval: checkpoint train column " +
                              std::to_string(c) +
                              " out of range for dataset with " +
                              std::to_string(data.dataset.sample_count()) +
                              " samples");
  const double reg = checkpoint.extra.contains("classifier_reg")
                         ? checkpoint.extra["classifier_reg"].get<double>()
                         : 1.0;

  if (checkpoint.model.ablation != Ablation::KVC) {
    if (checkpoint.model.theta_y.input_dim() != data.dataset.keyframes.rows())
      throw ContractViolation(
          "eval: checkpoint keyframe input dim " +
          std::to_string(checkpoint.model.theta_y.input_dim()) +
          " != dataset keyframe dim " +
          std::to_string(data.dataset.keyframes.rows()));
    if (checkpoint.model.theta_z.input_dim() != data.dataset.videos.rows())
      throw ContractViolation(
          "eval: checkpoint video input dim " +
          std::to_string(checkpoint.model.theta_z.input_dim()) +
          " != dataset video dim " +
          std::to_string(data.dataset.videos.rows()));
  }

  const SplitAccuracies acc = split_accuracies(
      checkpoint.model, data.dataset, train_columns, reg, checkpoint.model.seed);

  nlohmann::json metrics;
  if (acc.heldout_metrics) {
    metrics = acc.heldout_metrics->to_json();
    metrics["split"] = "heldout";
  } else {
    metrics = acc.train_metrics.to_json();
    metrics["split"] = "train";
  }
  metrics["train_split"] = acc.train_metrics.to_json();
  metrics["warnings"] = acc.warnings;
  validate_metrics_json(metrics);
  write_json(metrics, out_path);

  for (const auto& warning : acc.warnings)
    std::cerr << "warning: " << warning << "\n";
  std::cout << "eval: accuracy " << metrics["accuracy"].get<double>()
            << " on the " << metrics["split"].get<std::string>()
            << " split; metrics written to " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(const AppConfig& cfg, std::uint64_t seed,
                  double corruption) {
  const GradCheckResult result = run_gradcheck(cfg.hp, seed, corruption);
  for (const auto& entry : result.entries)
    std::cout << (entry.pass ? "ok   " : "FAIL ") << entry.name
              << " worst relative error " << entry.worst_rel_error << " at "
              << entry.worst_coordinate << "\n";
  if (!result.pass) {
    std::cerr << "gradcheck failed: worst coordinate "
              << result.worst_coordinate << " with relative error "
              << result.worst_rel_error << " (tolerance 1e-4)\n";
    return 5;
  }
  std::cout << "gradcheck passed: worst relative error "
            << result.worst_rel_error << " at " << result.worst_coordinate
            << "\n";
  return 0;
}

int cmd_ablate(const AppConfig& base_cfg, const std::string& data_dir,
               const std::string& out_dir) {
  const SynthResult data = load_dataset(data_dir);
  fs::create_directories(out_dir);

  const Ablation modes[4] = {Ablation::Full, Ablation::DIVA, Ablation::DIVF,
                             Ablation::KVC};
  nlohmann::json rows = nlohmann::json::array();
  std::cout << "mode      train_acc   heldout_acc\n";
  for (Ablation mode : modes) {
    AppConfig cfg = base_cfg;
    cfg.ablation = mode;
    const TrainedJob job = run_training_job(data, cfg, "");
    nlohmann::json row;
    row["ablation"] = ablation_name(mode);
    row["train_accuracy"] = job.accuracies.train_metrics.accuracy;
    if (job.accuracies.heldout_metrics)
      row["heldout_accuracy"] = job.accuracies.heldout_metrics->accuracy;
    else
      row["heldout_accuracy"] = nullptr;
    rows.push_back(row);

    std::cout << ablation_name(mode);
    for (std::size_t pad = ablation_name(mode).size(); pad < 10; ++pad)
      std::cout << ' ';
    char line[64];
    std::snprintf(line, sizeof line, "%-11.4f ",
                  job.accuracies.train_metrics.accuracy);
    std::cout << line;
    if (job.accuracies.heldout_metrics)
      std::cout << job.accuracies.heldout_metrics->accuracy;
    else
      std::cout << "n/a";
    std::cout << "\n";
  }

  nlohmann::json summary;
  summary["command"] = "ablate";
  summary["config"] = base_cfg.to_json();
  summary["ratio"] = base_cfg.ratio;
  summary["seed"] = base_cfg.train_seed;
  summary["rows"] = rows;
  write_json(summary, (fs::path(out_dir) / "ablate.json").string());
  return 0;
}

int cmd_report(const std::string& report_path) {
  const nlohmann::json report = read_json(report_path);
  std::cout << "report: " << report_path << "\n";
  if (report.contains("ablation"))
    std::cout << "  ablation              " << report["ablation"] << "\n";
  if (report.contains("seed"))
    std::cout << "  seed                  " << report["seed"] << "\n";
  if (report.contains("ratio"))
    std::cout << "  training ratio        " << report["ratio"] << "\n";
  if (report.contains("trace")) {
    const auto& trace = report["trace"];
    std::cout << "  iterations            " << trace.size() << "\n";
    if (report.contains("initial_objective") &&
        !report["initial_objective"].is_null())
      std::cout << "  initial objective     " << report["initial_objective"]
                << "\n";
    if (!trace.empty())
      std::cout << "  final objective       " << trace.back() << "\n";
  }
  if (report.contains("accuracy")) {
    const auto& acc = report["accuracy"];
    if (acc.contains("train"))
      std::cout << "  train accuracy        " << acc["train"] << "\n";
    if (acc.contains("heldout") && !acc["heldout"].is_null())
      std::cout << "  held-out accuracy     " << acc["heldout"] << "\n";
    if (acc.contains("baseline_video_heldout") &&
        !acc["baseline_video_heldout"].is_null())
      std::cout << "  video-only baseline   " << acc["baseline_video_heldout"]
                << "\n";
  }
  if (report.contains("ridge_fallback_activations"))
    std::cout << "  ridge fallbacks       "
              << report["ridge_fallback_activations"] << "\n";
  if (report.contains("timings"))
    std::cout << "  timings               " << report["timings"].dump()
              << "\n";
  return 0;
}

}  // namespace

void validate_metrics_json(const nlohmann::json& metrics) {
  if (!metrics.is_object())
    throw FormatError("metrics: root must be an object");
  if (!metrics.contains("accuracy") ||
      !metrics["accuracy"].is_number())
    throw FormatError("metrics: missing numeric 'accuracy'");
  const double accuracy = metrics["accuracy"].get<double>();
  if (!(accuracy >= 0.0 && accuracy <= 1.0))
    throw FormatError("metrics: accuracy outside [0, 1]");
  if (!metrics.contains("per_class") || !metrics["per_class"].is_array())
    throw FormatError("metrics: missing 'per_class' array");
  for (const auto& value : metrics["per_class"])
    if (!value.is_number())
      throw FormatError("metrics: per_class entries must be numbers");
  if (!metrics.contains("confusion") || !metrics["confusion"].is_array())
    throw FormatError("metrics: missing 'confusion' array");
  const auto& confusion = metrics["confusion"];
  const std::size_t classes = metrics["per_class"].size();
  if (confusion.size() != classes)
    throw FormatError("metrics: confusion row count != class count");
  std::int64_t diagonal = 0, total = 0;
  for (std::size_t r = 0; r < classes; ++r) {
    if (!confusion[r].is_array() || confusion[r].size() != classes)
      throw FormatError("metrics: confusion matrix is not square");
    for (std::size_t cidx = 0; cidx < classes; ++cidx) {
      if (!confusion[r][cidx].is_number_integer())
        throw FormatError("metrics: confusion entries must be integers");
      const auto count = confusion[r][cidx].get<std::int64_t>();
      if (count < 0) throw FormatError("metrics: negative confusion count");
      total += count;
      if (r == cidx) diagonal += count;
    }
  }
  if (total > 0) {
    const double recomputed =
        static_cast<double>(diagonal) / static_cast<double>(total);
    if (std::fabs(recomputed - accuracy) > 1e-12)
      throw FormatError("metrics: accuracy disagrees with confusion matrix");
  }
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"cross-modal adaptation and fusion trainer", "divafn"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, checkpoint_path, report_path;
  std::uint64_t seed_value = 0;
  double ratio_value = 1.0;
  std::string ablation_value;
  std::size_t iters_value = 0;
  bool strict_flag = false;
  double inject_gradient_error = 0.0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "config JSON")->required();
  synth->add_option("--out", out_path, "output dataset directory")
      ->required();
  auto* synth_seed = synth->add_option("--seed", seed_value, "seed override");

  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--config", config_path, "config JSON");
  train->add_option("--out", out_path, "output directory")->required();
  auto* train_seed = train->add_option("--seed", seed_value, "seed override");
  auto* train_ratio =
      train->add_option("--ratio", ratio_value, "training-sample ratio");
  auto* train_ablation = train->add_option(
      "--ablation", ablation_value, "full, DIVA, DIVF or KVC");
  auto* train_iters =
      train->add_option("--iters", iters_value, "iteration override");
  auto* train_strict = train->add_flag("--strict-paper-gradients",
                                       strict_flag,
                                       "drop the stacked-autoencoder terms "
                                       "from the network gradients");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "DVFN1 checkpoint")
      ->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--out", out_path, "metrics JSON output path")->required();

  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--config", config_path, "config JSON");
  auto* gradcheck_seed =
      gradcheck->add_option("--seed", seed_value, "seed override");
  gradcheck
      ->add_option("--inject-gradient-error", inject_gradient_error,
                   "test hook: bias added to one analytic gradient term")
      ->group("");

  auto* ablate = app.add_subcommand(
      "ablate", "train and compare full, DIVA, DIVF and KVC");
  ablate->add_option("--data", data_dir, "dataset directory")->required();
  ablate->add_option("--config", config_path, "config JSON");
  ablate->add_option("--out", out_path, "output directory")->required();
  auto* ablate_seed = ablate->add_option("--seed", seed_value, "seed override");
  auto* ablate_ratio =
      ablate->add_option("--ratio", ratio_value, "training-sample ratio");
  auto* ablate_iters =
      ablate->add_option("--iters", iters_value, "iteration override");

  auto* report = app.add_subcommand("report", "pretty-print a report.json");
  report->add_option("--report", report_path, "report JSON path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    AppConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);

    if (synth->parsed()) {
      if (synth_seed->count()) cfg.synth_seed = seed_value;
      return cmd_synth(cfg, out_path);
    }
    if (train->parsed() || ablate->parsed()) {
      if ((train->parsed() ? train_seed : ablate_seed)->count())
        cfg.train_seed = seed_value;
      if ((train->parsed() ? train_ratio : ablate_ratio)->count()) {
        if (!(ratio_value > 0.0 && ratio_value <= 1.0))
          throw ConfigError("--ratio must be in (0, 1]");
        cfg.ratio = ratio_value;
      }
      if ((train->parsed() ? train_iters : ablate_iters)->count())
        cfg.hp.iters = iters_value;
      if (train->parsed()) {
        if (train_ablation->count())
          cfg.ablation = ablation_from_name(ablation_value);
        if (train_strict->count()) cfg.strict_paper_gradients = strict_flag;
        return cmd_train(cfg, data_dir, out_path);
      }
      return cmd_ablate(cfg, data_dir, out_path);
    }
    if (eval->parsed()) return cmd_eval(checkpoint_path, data_dir, out_path);
    if (gradcheck->parsed()) {
      const std::uint64_t seed = gradcheck_seed->count() ? seed_value : 7;
      return cmd_gradcheck(cfg, seed, inject_gradient_error);
    }
    if (report->parsed()) return cmd_report(report_path);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace divafn
