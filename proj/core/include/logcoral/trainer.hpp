#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "logcoral/data.hpp"
#include "logcoral/losses.hpp"
#include "logcoral/network.hpp"
#include "logcoral/statistics.hpp"

namespace logcoral {

/// Hyperparameters of joint classification + alignment training.
struct TrainConfig {
  LossWeights weights;
  double learning_rate = 1e-3;
  double optimizer_momentum = 0.9;
  int batch_size = 64;
  double stats_momentum = SmoothedStats::kDefaultMomentum;
  /// Absolute eigenvalue shift before the matrix log. Unset:
  /// default_pair_epsilon of the two smoothed covariances.
  std::optional<double> epsilon;
  /// Tap feeding the covariance losses (CORAL, LogCORAL): the last hidden
  /// layer of the default two-layer model.
  std::string second_order_tap = "h2";
  /// Tap feeding the mean loss: the layer below.
  std::string mean_tap = "h1";
  /// Leading steps trained on the classification loss alone, standing in
  /// for a network pretrained on the source domain.
  std::int64_t warmup_steps = 0;

  /// Loss weights in force for the step after `completed_steps`.
  LossWeights active_weights(std::int64_t completed_steps) const;

  /// Throws InvalidInput on out-of-range values.
  void validate() const;
};

/// Moving-average statistics of one domain at both loss taps.
struct DomainStats {
  SmoothedStats second_order;
  SmoothedStats first_order;
};

/// Everything needed to continue training bit-exactly.
struct TrainState {
  MlpModel model;
  Gradients velocity;
  DomainStats source_stats;
  DomainStats target_stats;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;

  /// Fresh state: model initialized from `seed`, zero velocity, empty stats.
  static TrainState initial(MlpModel model, const TrainConfig& config, std::uint64_t seed);
};

/// Scalar losses of one step. Alignment metrics are evaluated on the
/// smoothed statistics whether or not their weight is active.
struct LossReport {
  std::int64_t step = 0;
  double classification = 0.0;
  double coral = 0.0;
  double logcoral = 0.0;
  double mean = 0.0;
  double total = 0.0;
};

/// Objective value, parameter gradients and the statistics the step would
/// commit. Gradients flow only through the current batch's share of the
/// smoothed statistics.
struct ObjectiveResult {
  LossReport report;
  Gradients gradients;
  DomainStats source_stats;
  DomainStats target_stats;
};

ObjectiveResult evaluate_objective(const MlpModel& model, const DomainStats& source_stats,
                                   const DomainStats& target_stats, const FeatureBatch& source,
                                   const FeatureBatch& target, const TrainConfig& config);

/// One momentum-SGD step on the weighted objective. Throws NumericalFailure
/// naming the offending loss when a value turns non-finite; `state` is left
/// untouched in that case.
LossReport train_step(TrainState& state, const FeatureBatch& source, const FeatureBatch& target,
                      const TrainConfig& config);

/// `size` rows drawn uniformly with replacement.
FeatureBatch sample_batch(std::mt19937_64& rng, const FeatureBatch& data, int size);

/// One line of the training log.
struct MetricsRecord {
  LossReport losses;
  std::optional<double> target_accuracy;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Trains until state.step reaches `total_steps`. Each step draws a labeled
/// source batch and an unlabeled target batch from state.rng. Target accuracy
/// is recorded every `eval_every` steps and on the final step (eval_every <= 0
/// disables the periodic evaluation).
void run_training(TrainState& state, const DatasetPair& data, const TrainConfig& config,
                  std::int64_t total_steps, int eval_every, const MetricsSink& sink);

}  // namespace logcoral
