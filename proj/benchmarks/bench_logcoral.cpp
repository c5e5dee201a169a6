#include <benchmark/benchmark.h>

#include <random>

#include "logcoral/data.hpp"
#include "logcoral/experiment.hpp"
#include "logcoral/linalg.hpp"
#include "logcoral/losses.hpp"
#include "logcoral/statistics.hpp"
#include "logcoral/trainer.hpp"

namespace {

using namespace logcoral;

SymmetricMatrix random_spd(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(2 * d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  return SymmetricMatrix::symmetrize(g.transpose() * g / (2.0 * d));
}

void BM_SymEig(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const SymmetricMatrix m = random_spd(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(m));
}
BENCHMARK(BM_SymEig)->RangeMultiplier(4)->Range(4, 256);

void BM_MatrixLog(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const SymmetricMatrix m = random_spd(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(matrix_log(m));
}
BENCHMARK(BM_MatrixLog)->RangeMultiplier(4)->Range(4, 256);

void BM_CoralLoss(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const int d = static_cast<int>(state.range(0));
  const SymmetricMatrix s = random_spd(rng, d);
  const SymmetricMatrix t = random_spd(rng, d);
  for (auto _ : state) benchmark::DoNotOptimize(coral_loss(s, t));
}
BENCHMARK(BM_CoralLoss)->RangeMultiplier(4)->Range(4, 256);

void BM_LogCoralLoss(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const int d = static_cast<int>(state.range(0));
  const SymmetricMatrix s = random_spd(rng, d);
  const SymmetricMatrix t = random_spd(rng, d);
  const double eps = default_pair_epsilon(s, t);
  for (auto _ : state) benchmark::DoNotOptimize(logcoral_loss(s, t, eps));
}
BENCHMARK(BM_LogCoralLoss)->RangeMultiplier(4)->Range(4, 256);

void BM_BatchCovariance(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = static_cast<int>(state.range(0));
  Matrix x(64, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const FeatureBatch batch(x);
  for (auto _ : state) benchmark::DoNotOptimize(batch_covariance(batch));
}
BENCHMARK(BM_BatchCovariance)->RangeMultiplier(4)->Range(4, 256);

// One step of the full objective on the default benchmark; arg 0 is the
// baseline, arg 1 adds LogCORAL and mean alignment.
void BM_TrainStep(benchmark::State& state) {
  const DatasetPair data = generate(benchmark_spec(ShiftKind::kAffine, 2017));
  TrainConfig config;
  if (state.range(0) == 0) config.weights = LossWeights{1.0, 0.0, 0.0, 0.0};
  TrainState train = make_initial_state(data, config, ModelShape{}, 1);
  for (auto _ : state) {
    const FeatureBatch s = sample_batch(train.rng, data.source, config.batch_size);
    const FeatureBatch t = sample_batch(train.rng, data.target, config.batch_size);
    benchmark::DoNotOptimize(train_step(train, s, t, config));
  }
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
