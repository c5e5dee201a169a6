#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logcoral/data.hpp"
#include "logcoral/network.hpp"
#include "logcoral/trainer.hpp"

namespace logcoral {

/// Hidden widths and activation of the classifier; input and output widths
/// come from the data.
struct ModelShape {
  std::vector<int> hidden = {128, 64};
  Activation activation = Activation::kRelu;
};

/// Builds the classifier for `data` and a fresh training state from `seed`.
TrainState make_initial_state(const DatasetPair& data, const TrainConfig& config,
                              const ModelShape& shape, std::uint64_t seed);

struct ExperimentResult {
  double final_target_accuracy = 0.0;
  std::vector<MetricsRecord> history;  // every step, warm-up included
};

/// Trains from scratch for config.warmup_steps + `steps` steps and records
/// every step.
ExperimentResult run_experiment(const DatasetPair& data, const TrainConfig& config,
                                const ModelShape& shape, std::uint64_t seed, std::int64_t steps,
                                int eval_every = 0);

enum class Metric { kClassification, kCoral, kLogcoral, kMean, kTotal };

/// Average of one logged loss over history entries [begin, end).
double window_mean(std::span<const MetricsRecord> history, Metric metric, std::size_t begin,
                   std::size_t end);

/// Relative change of a metric from its first `window` steps to its last
/// `window` steps: (late - early) / early.
double relative_change(std::span<const MetricsRecord> history, Metric metric,
                       std::size_t window);

/// The records logged after the warm-up phase.
std::span<const MetricsRecord> adaptation_phase(const ExperimentResult& result,
                                                const TrainConfig& config);

/// Named loss configurations of the ablation table.
struct AblationArm {
  std::string name;
  LossWeights weights;
};

/// baseline, coral, logcoral, mean, coral+mean, logcoral+mean. Each arm
/// switches its alignment losses on at the magnitude given in `magnitude`;
/// every arm keeps magnitude.classification.
std::vector<AblationArm> standard_ablation_arms(const LossWeights& magnitude);

struct ArmOutcome {
  std::string name;
  std::optional<ExperimentResult> result;  // empty when training failed
  std::string error;
};

/// Runs every arm from the same seed. The warm-up phase does not depend on
/// the alignment weights, so it is trained once and shared by all arms.
/// A NumericalFailure marks that arm failed; the others still run.
std::vector<ArmOutcome> run_arms(const DatasetPair& data, const TrainConfig& config,
                                 const ModelShape& shape, const std::vector<AblationArm>& arms,
                                 std::uint64_t seed, std::int64_t steps, int eval_every = 0);

double median(std::vector<double> values);

}  // namespace logcoral
