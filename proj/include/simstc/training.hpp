#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simstc/graphs.hpp"
#include "simstc/losses.hpp"
#include "simstc/model.hpp"

namespace simstc {

enum class EarlyStopMetric { kValCe, kValTotal };
std::string_view early_stop_metric_name(EarlyStopMetric m);
std::optional<EarlyStopMetric> parse_early_stop_metric(std::string_view name);

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t max_epochs = 500;
  std::size_t patience = 10;
  // An epoch counts as an improvement only if it beats the best validation
  // loss by more than this.
  double min_improvement = 1e-6;
  std::uint64_t seed = 0;
  ModelConfig model;
  ContrastiveConfig contrastive;
  Reduction ce_reduction = Reduction::kMean;
  EarlyStopMetric early_stop_metric = EarlyStopMetric::kValCe;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of every parameter from its current
// gradient. Throws before touching anything if a gradient is non-finite.
void adam_step(std::span<const NamedParameter> params, AdamState& state, double learning_rate);

struct ClassScores {
  std::size_t support = 0;  // true members
  std::size_t predicted = 0;
  std::size_t true_positive = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalResult {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
};

// Macro-F1 averages over all `num_classes` classes; a class with
// precision + recall == 0 scores 0.
EvalResult score_predictions(std::span<const std::uint32_t> predicted,
                             std::span<const std::uint32_t> truth, std::size_t num_classes);

EvalResult evaluate(const ModelParams& model, const GraphBundle& bundle, Split split);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  LossReport train;
  double val_ce = 0.0;
  double val_total = 0.0;
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  double seconds = 0.0;
};

nlohmann::json to_json(const EpochRecord& record, bool include_wall_clock = true);

struct TrainResult {
  ModelParams model;  // snapshot from the best validation epoch
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool early_stopped = false;
};

// The training objective: cross-entropy over the train split plus the
// contrastive loss over every document.
struct Objective {
  ForwardPass pass;
  Tensor ce;
  Tensor cl;
  Tensor total;
  std::array<double, 3> per_pair{};
};

Objective build_objective(const ModelParams& model, const GraphBundle& bundle, const TrainConfig& config);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Full-batch training. Each epoch: forward over all documents, cross-entropy
// on the train split plus the contrastive loss over all documents, backward,
// Adam step, then a validation pass with the updated weights. Stops after
// `patience` epochs without an improvement or at max_epochs.
TrainResult train(const GraphBundle& bundle, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Evaluates the loss terms of `model` on `bundle` without recording a
// backward graph.
LossReport compute_losses(const ModelParams& model, const GraphBundle& bundle,
                          const TrainConfig& config, Split ce_split);

struct AblationCell {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t best_epoch = 0;
};

struct AblationRow {
  PairSet pairs;
  std::vector<AblationCell> runs;  // one per seed, in seed order
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
};

// The eight pair subsets in ablation-grid order: none, wp, pe, we, wp+pe,
// wp+we, pe+we, all.
std::vector<PairSet> ablation_grid();

// Trains every (subset, seed) combination on up to `threads` worker threads
// and reports test-split accuracy and macro-F1. Standard deviations are
// population (divide by n).
std::vector<AblationRow> run_ablation(const GraphBundle& bundle, const TrainConfig& base,
                                      std::span<const std::uint64_t> seeds, std::size_t threads = 1);

// SIMSTC_THREADS if set and positive, else 1.
std::size_t configured_threads();

}  // namespace simstc
