#include "logcoral/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace logcoral {

namespace {

void check_finite_loss(double value, const char* name, std::int64_t step) {
  if (!std::isfinite(value)) {
    std::ostringstream os;
    os << name << " loss became non-finite (" << value << ") at step " << step;
    throw NumericalFailure(os.str(), static_cast<std::size_t>(step));
  }
}

void check_finite_activations(const ForwardPass& pass, const MlpModel& model, const char* domain) {
  for (std::size_t l = 0; l < pass.outputs.size(); ++l) {
    if (!pass.outputs[l].allFinite()) {
      throw NumericalFailure(std::string(domain) + " activations at tap '" +
                             model.tap_names()[l] + "' are non-finite");
    }
  }
}

DomainStats fresh_stats(const MlpModel& model, const TrainConfig& config) {
  return DomainStats{
      SmoothedStats(model.tap_width(config.second_order_tap), config.stats_momentum),
      SmoothedStats(model.tap_width(config.mean_tap), config.stats_momentum)};
}

}  // namespace

void TrainConfig::validate() const {
  weights.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidInput("learning rate must be positive");
  }
  if (!(optimizer_momentum >= 0.0 && optimizer_momentum < 1.0)) {
    throw InvalidInput("optimizer momentum must lie in [0, 1)");
  }
  if (batch_size < 2) throw InvalidInput("batch size must be at least 2");
  if (!(stats_momentum > 0.0 && stats_momentum < 1.0)) {
    throw InvalidInput("statistics momentum must lie strictly between 0 and 1");
  }
  if (epsilon && (!(*epsilon > 0.0) || !std::isfinite(*epsilon))) {
    throw InvalidInput("epsilon must be positive");
  }
  if (warmup_steps < 0) throw InvalidInput("warmup steps must be non-negative");
}

LossWeights TrainConfig::active_weights(std::int64_t completed_steps) const {
  if (completed_steps >= warmup_steps) return weights;
  return LossWeights{weights.classification, 0.0, 0.0, 0.0};
}

TrainState TrainState::initial(MlpModel model, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  DomainStats source = fresh_stats(model, config);
  DomainStats target = source;
  Gradients velocity = Gradients::zeros_like(model);
  return TrainState{std::move(model), std::move(velocity), std::move(source), std::move(target),
                    0, seed, std::mt19937_64(seed)};
}

ObjectiveResult evaluate_objective(const MlpModel& model, const DomainStats& source_stats,
                                   const DomainStats& target_stats, const FeatureBatch& source,
                                   const FeatureBatch& target, const TrainConfig& config) {
  const LossWeights& w = config.weights;
  const std::size_t cov_tap = model.tap_index(config.second_order_tap);
  const std::size_t mean_tap = model.tap_index(config.mean_tap);
  const std::size_t logits_tap = model.num_layers() - 1;

  const ForwardPass fs = forward(model, source);
  const ForwardPass ft = forward(model, target);
  check_finite_activations(fs, model, "source");
  check_finite_activations(ft, model, "target");

  ObjectiveResult result{LossReport{}, Gradients{}, source_stats, target_stats};
  LossReport& report = result.report;

  std::vector<Matrix> grads_s(model.num_layers());
  std::vector<Matrix> grads_t(model.num_layers());
  const auto inject = [](std::vector<Matrix>& slots, std::size_t tap, const Matrix& g) {
    if (slots[tap].size() == 0) {
      slots[tap] = g;
    } else {
      slots[tap] += g;
    }
  };

  if (source.has_labels()) {
    const LossBundle ce = softmax_cross_entropy(fs.logits(), source.labels());
    report.classification = ce.value;
    if (w.classification > 0.0) inject(grads_s, logits_tap, w.classification * ce.grad_source);
  } else if (w.classification > 0.0) {
    throw InvalidInput("train_step: classification weight is positive but source has no labels");
  }

  // Second-order statistics.
  const FeatureBatch cov_feat_s(fs.outputs[cov_tap]);
  const FeatureBatch cov_feat_t(ft.outputs[cov_tap]);
  result.source_stats.second_order = update_smoothed(
      source_stats.second_order, batch_covariance(cov_feat_s), batch_mean(cov_feat_s));
  result.target_stats.second_order = update_smoothed(
      target_stats.second_order, batch_covariance(cov_feat_t), batch_mean(cov_feat_t));
  const SymmetricMatrix& cov_s = result.source_stats.second_order.cov();
  const SymmetricMatrix& cov_t = result.target_stats.second_order.cov();
  if (!cov_s.all_finite() || !cov_t.all_finite()) {
    throw NumericalFailure("covariance at tap '" + config.second_order_tap + "' is non-finite");
  }

  const double eps = config.epsilon.value_or(default_pair_epsilon(cov_s, cov_t));
  const LossBundle coral = coral_loss(cov_s, cov_t);
  const LossBundle logc = logcoral_loss(cov_s, cov_t, eps);
  report.coral = coral.value;
  report.logcoral = logc.value;

  if (w.uses_second_order()) {
    const Matrix g_s = w.coral * coral.grad_source + w.logcoral * logc.grad_source;
    const Matrix g_t = w.coral * coral.grad_target + w.logcoral * logc.grad_target;
    inject(grads_s, cov_tap,
           chain_to_features(SymmetricMatrix::symmetrize(g_s), cov_feat_s,
                             source_stats.second_order.batch_weight()));
    inject(grads_t, cov_tap,
           chain_to_features(SymmetricMatrix::symmetrize(g_t), cov_feat_t,
                             target_stats.second_order.batch_weight()));
  }

  // First-order statistics.
  const FeatureBatch mean_feat_s(fs.outputs[mean_tap]);
  const FeatureBatch mean_feat_t(ft.outputs[mean_tap]);
  result.source_stats.first_order = update_smoothed(
      source_stats.first_order, batch_covariance(mean_feat_s), batch_mean(mean_feat_s));
  result.target_stats.first_order = update_smoothed(
      target_stats.first_order, batch_covariance(mean_feat_t), batch_mean(mean_feat_t));
  const LossBundle mean = mean_loss(result.source_stats.first_order.mean(),
                                    result.target_stats.first_order.mean());
  report.mean = mean.value;
  if (w.mean > 0.0) {
    inject(grads_s, mean_tap,
           chain_mean_to_features(w.mean * Vector(mean.grad_source), mean_feat_s,
                                  source_stats.first_order.batch_weight()));
    inject(grads_t, mean_tap,
           chain_mean_to_features(w.mean * Vector(mean.grad_target), mean_feat_t,
                                  target_stats.first_order.batch_weight()));
  }

  report.total = w.classification * report.classification + w.coral * report.coral +
                 w.logcoral * report.logcoral + w.mean * report.mean;

  result.gradients = backward(model, source.data(), fs, grads_s);
  const bool target_grads =
      std::any_of(grads_t.begin(), grads_t.end(), [](const Matrix& m) { return m.size() > 0; });
  if (target_grads) result.gradients += backward(model, target.data(), ft, grads_t);
  return result;
}

LossReport train_step(TrainState& state, const FeatureBatch& source, const FeatureBatch& target,
                      const TrainConfig& config) {
  if (source.cols() != target.cols()) {
    throw InvalidInput("train_step: source and target feature widths differ");
  }
  const std::int64_t step = state.step + 1;
  TrainConfig active = config;
  active.weights = config.active_weights(state.step);
  ObjectiveResult result = evaluate_objective(state.model, state.source_stats,
                                              state.target_stats, source, target, active);
  LossReport report = result.report;
  report.step = step;
  check_finite_loss(report.classification, "classification", step);
  check_finite_loss(report.coral, "CORAL", step);
  check_finite_loss(report.logcoral, "LogCORAL", step);
  check_finite_loss(report.mean, "mean", step);

  MlpModel updated = state.model;
  Gradients velocity = state.velocity;
  for (std::size_t l = 0; l < updated.num_layers(); ++l) {
    velocity.weight[l] = config.optimizer_momentum * velocity.weight[l] -
                         config.learning_rate * result.gradients.weight[l];
    velocity.bias[l] = config.optimizer_momentum * velocity.bias[l] -
                       config.learning_rate * result.gradients.bias[l];
    updated.layers()[l].weight += velocity.weight[l];
    updated.layers()[l].bias += velocity.bias[l];
  }
  try {
    updated.check_finite();
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string(e.what()) + " after step " + std::to_string(step),
                           static_cast<std::size_t>(step));
  }

  state.model = std::move(updated);
  state.velocity = std::move(velocity);
  state.source_stats = std::move(result.source_stats);
  state.target_stats = std::move(result.target_stats);
  state.step = step;
  return report;
}

FeatureBatch sample_batch(std::mt19937_64& rng, const FeatureBatch& data, int size) {
  if (size < 1) throw InvalidInput("sample_batch: size must be positive");
  std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(size));
  for (auto& r : rows) r = pick(rng);
  return data.subset(rows);
}

void run_training(TrainState& state, const DatasetPair& data, const TrainConfig& config,
                  std::int64_t total_steps, int eval_every, const MetricsSink& sink) {
  config.validate();
  if (data.source.cols() != data.target.cols()) {
    throw InvalidInput("run_training: source and target feature widths differ");
  }
  while (state.step < total_steps) {
    const FeatureBatch source = sample_batch(state.rng, data.source, config.batch_size);
    const FeatureBatch target =
        sample_batch(state.rng, data.target, config.batch_size).without_labels();
    MetricsRecord record{train_step(state, source, target, config), std::nullopt};
    const bool periodic = eval_every > 0 && state.step % eval_every == 0;
    if (periodic || state.step == total_steps) {
      record.target_accuracy = evaluate(state.model, data.target);
    }
    if (sink) sink(record);
  }
}

}  // namespace logcoral
