#include "logcoral/experiment.hpp"

#include <algorithm>

namespace logcoral {

namespace {

double metric_value(const LossReport& r, Metric metric) {
  switch (metric) {
    case Metric::kClassification: return r.classification;
    case Metric::kCoral: return r.coral;
    case Metric::kLogcoral: return r.logcoral;
    case Metric::kMean: return r.mean;
    case Metric::kTotal: return r.total;
  }
  return 0.0;
}

}  // namespace

TrainState make_initial_state(const DatasetPair& data, const TrainConfig& config,
                              const ModelShape& shape, std::uint64_t seed) {
  std::vector<int> dims;
  dims.push_back(static_cast<int>(data.source.cols()));
  dims.insert(dims.end(), shape.hidden.begin(), shape.hidden.end());
  int classes = 0;
  for (int label : data.source.labels()) classes = std::max(classes, label + 1);
  if (data.target.has_labels()) {
    for (int label : data.target.labels()) classes = std::max(classes, label + 1);
  }
  dims.push_back(std::max(classes, 2));
  MlpModel model(std::move(dims), shape.activation, seed * 0x2545f4914f6cdd1dULL + 1);
  return TrainState::initial(std::move(model), config, seed);
}

ExperimentResult run_experiment(const DatasetPair& data, const TrainConfig& config,
                                const ModelShape& shape, std::uint64_t seed, std::int64_t steps,
                                int eval_every) {
  TrainState state = make_initial_state(data, config, shape, seed);
  ExperimentResult result;
  const std::int64_t total = config.warmup_steps + steps;
  result.history.reserve(static_cast<std::size_t>(std::max<std::int64_t>(total, 0)));
  run_training(state, data, config, total, eval_every,
               [&](const MetricsRecord& r) { result.history.push_back(r); });
  result.final_target_accuracy = evaluate(state.model, data.target);
  return result;
}

double window_mean(std::span<const MetricsRecord> history, Metric metric, std::size_t begin,
                   std::size_t end) {
  end = std::min(end, history.size());
  if (begin >= end) throw InvalidInput("window_mean: empty window");
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += metric_value(history[i].losses, metric);
  return sum / static_cast<double>(end - begin);
}

double relative_change(std::span<const MetricsRecord> history, Metric metric,
                       std::size_t window) {
  if (window == 0 || history.size() < window) {
    throw InvalidInput("relative_change: history shorter than the window");
  }
  const double early = window_mean(history, metric, 0, window);
  const double late = window_mean(history, metric, history.size() - window, history.size());
  return (late - early) / early;
}

std::span<const MetricsRecord> adaptation_phase(const ExperimentResult& result,
                                                const TrainConfig& config) {
  const std::span<const MetricsRecord> all(result.history);
  const auto skip = static_cast<std::size_t>(std::max<std::int64_t>(config.warmup_steps, 0));
  return skip >= all.size() ? all.last(0) : all.subspan(skip);
}

std::vector<ArmOutcome> run_arms(const DatasetPair& data, const TrainConfig& config,
                                 const ModelShape& shape, const std::vector<AblationArm>& arms,
                                 std::uint64_t seed, std::int64_t steps, int eval_every) {
  std::vector<ArmOutcome> outcomes;
  std::vector<MetricsRecord> warm_history;
  TrainState warm = make_initial_state(data, config, shape, seed);
  std::string warm_error;
  try {
    run_training(warm, data, config, config.warmup_steps, eval_every,
                 [&](const MetricsRecord& r) { warm_history.push_back(r); });
  } catch (const NumericalFailure& e) {
    warm_error = std::string("warm-up: ") + e.what();
  }
  // run_training evaluates its final step; the warm-up end is not final here.
  if (!warm_history.empty()) {
    const std::int64_t last = warm_history.back().losses.step;
    if (!(eval_every > 0 && last % eval_every == 0)) warm_history.back().target_accuracy.reset();
  }

  for (const AblationArm& arm : arms) {
    ArmOutcome outcome{arm.name, std::nullopt, warm_error};
    if (warm_error.empty()) {
      TrainConfig arm_config = config;
      arm_config.weights = arm.weights;
      TrainState state = warm;
      ExperimentResult result{0.0, warm_history};
      try {
        run_training(state, data, arm_config, config.warmup_steps + steps, eval_every,
                     [&](const MetricsRecord& r) { result.history.push_back(r); });
        result.final_target_accuracy = evaluate(state.model, data.target);
        outcome.result = std::move(result);
      } catch (const NumericalFailure& e) {
        outcome.error = e.what();
      }
    }
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

std::vector<AblationArm> standard_ablation_arms(const LossWeights& magnitude) {
  const double c = magnitude.classification;
  const double cor = magnitude.coral;
  const double log = magnitude.logcoral;
  const double mean = magnitude.mean;
  return {
      {"baseline", LossWeights{c, 0.0, 0.0, 0.0}},
      {"coral", LossWeights{c, cor, 0.0, 0.0}},
      {"logcoral", LossWeights{c, 0.0, log, 0.0}},
      {"mean", LossWeights{c, 0.0, 0.0, mean}},
      {"coral+mean", LossWeights{c, cor, 0.0, mean}},
      {"logcoral+mean", LossWeights{c, 0.0, log, mean}},
  };
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace logcoral
