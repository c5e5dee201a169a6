#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logcoral/losses.hpp"
#include "logcoral/network.hpp"
#include "oracles.hpp"

namespace logcoral {
namespace {

using testing::Mat;
using testing::Vec;

TEST(MlpModel, ShapesAndTaps) {
  const MlpModel model({16, 128, 64, 5}, Activation::kRelu, 1);
  EXPECT_EQ(model.num_layers(), 3u);
  EXPECT_EQ(model.tap_names(), (std::vector<std::string>{"h1", "h2", "logits"}));
  EXPECT_EQ(model.tap_index("h2"), 1u);
  EXPECT_EQ(model.tap_width("h1"), 128);
  EXPECT_EQ(model.tap_width("logits"), 5);
  EXPECT_THROW(model.tap_index("fc7"), InvalidInput);
  EXPECT_EQ(model.layers()[1].weight.rows(), 64);
  EXPECT_EQ(model.layers()[1].weight.cols(), 128);
}

TEST(MlpModel, RejectsInconsistentLayers) {
  std::vector<DenseLayer> layers{{Mat::Zero(4, 3), Vec::Zero(4)}, {Mat::Zero(2, 5), Vec::Zero(2)}};
  EXPECT_THROW(MlpModel(layers, Activation::kRelu), InvalidInput);
  EXPECT_THROW(MlpModel(std::vector<int>{3}, Activation::kRelu, 0), InvalidInput);
  EXPECT_THROW(MlpModel(std::vector<int>{3, 0, 2}, Activation::kRelu, 0), InvalidInput);
}

TEST(MlpModel, SameSeedSameWeights) {
  const MlpModel a({4, 8, 3}, Activation::kRelu, 7);
  const MlpModel b({4, 8, 3}, Activation::kRelu, 7);
  const MlpModel c({4, 8, 3}, Activation::kRelu, 8);
  EXPECT_EQ(a.layers()[0].weight, b.layers()[0].weight);
  EXPECT_NE(a.layers()[0].weight, c.layers()[0].weight);
}

TEST(MlpModel, CheckFiniteNamesLayer) {
  MlpModel model({2, 3, 2}, Activation::kTanh, 0);
  model.layers()[1].bias[0] = NAN;
  try {
    model.check_finite();
    FAIL();
  } catch (const NumericalFailure& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
}

TEST(Forward, ZeroParametersGiveZeroLogits) {
  std::vector<DenseLayer> layers{{Mat::Zero(6, 4), Vec::Zero(6)}, {Mat::Zero(3, 6), Vec::Zero(3)}};
  const MlpModel model(layers, Activation::kRelu);
  std::mt19937_64 rng(1);
  const ForwardPass pass = forward(model, testing::gaussian(rng, 5, 4));
  EXPECT_EQ(pass.logits().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Forward, IdentityLinearLayerPassesInputsThrough) {
  const MlpModel model({DenseLayer{Mat::Identity(3, 3), Vec::Zero(3)}}, Activation::kRelu);
  std::mt19937_64 rng(2);
  const Mat x = testing::gaussian(rng, 4, 3);
  EXPECT_EQ(forward(model, x).logits(), x);
}

TEST(Forward, RejectsWidthMismatch) {
  const MlpModel model({3, 4, 2}, Activation::kRelu, 0);
  EXPECT_THROW(forward(model, Mat::Zero(2, 5)), InvalidInput);
}

// Flattened view over every parameter, for finite differences.
std::vector<double*> parameter_slots(MlpModel& model) {
  std::vector<double*> slots;
  for (DenseLayer& layer : model.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) slots.push_back(layer.weight.data() + i);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) slots.push_back(layer.bias.data() + i);
  }
  return slots;
}

std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    out.insert(out.end(), g.weight[l].data(), g.weight[l].data() + g.weight[l].size());
    out.insert(out.end(), g.bias[l].data(), g.bias[l].data() + g.bias[l].size());
  }
  return out;
}

class BackwardCheck : public ::testing::TestWithParam<Activation> {};

TEST_P(BackwardCheck, EveryParameterMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  MlpModel model({5, 7, 6, 3}, GetParam(), 11);
  // Nonzero biases keep ReLU pre-activations off the kink at exactly zero.
  for (DenseLayer& layer : model.layers()) layer.bias = 0.5 * testing::gaussian(rng, layer.bias.size(), 1);
  const Mat x = testing::gaussian(rng, 9, 5);
  const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0, 1, 2};
  // Objective: cross-entropy on the logits plus a fixed linear probe on h1.
  const Mat probe = testing::gaussian(rng, 9, 7);
  const auto objective = [&](const MlpModel& m) {
    const ForwardPass pass = forward(m, x);
    return softmax_cross_entropy(pass.logits(), labels).value +
           pass.outputs[0].cwiseProduct(probe).sum();
  };

  const ForwardPass pass = forward(model, x);
  std::vector<Matrix> grads(model.num_layers());
  grads[0] = probe;
  grads[2] = softmax_cross_entropy(pass.logits(), labels).grad_source;
  const std::vector<double> analytic = flatten(backward(model, x, pass, grads));

  const auto slots = parameter_slots(model);
  ASSERT_EQ(slots.size(), analytic.size());
  double worst = 0.0;
  double scale = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + h;
    const double up = objective(model);
    *slots[i] = saved - h;
    const double down = objective(model);
    *slots[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - analytic[i]));
    scale = std::max(scale, std::abs(numeric));
  }
  EXPECT_LE(worst / scale, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Activations, BackwardCheck,
                         ::testing::Values(Activation::kRelu, Activation::kTanh));

TEST(Evaluate, PerfectPredictionsScoreOne) {
  Mat x(4, 3);
  x << 5, 0, 0, 0, 5, 0, 0, 0, 5, 5, 0, 0;
  const MlpModel model({DenseLayer{Mat::Identity(3, 3), Vec::Zero(3)}}, Activation::kRelu);
  EXPECT_DOUBLE_EQ(evaluate(model, FeatureBatch(x, std::vector<int>{0, 1, 2, 0})), 1.0);
}

TEST(Evaluate, RandomModelOnBalancedDataIsNearChance) {
  // Random logits on k = 4 balanced classes: accuracy ~ Binomial(n, 1/4) / n.
  std::mt19937_64 rng(5);
  const int n = 4000;
  const int k = 4;
  const MlpModel model({8, 16, k}, Activation::kRelu, 99);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i % k;
  const double acc = evaluate(model, FeatureBatch(testing::gaussian(rng, n, 8), labels));
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  // Features carry no label information, so only the label marginal matters.
  EXPECT_NEAR(acc, 0.25, 3 * sigma);
}

TEST(Evaluate, ErrorsOnUnlabeledOrEmpty) {
  const MlpModel model({3, 2}, Activation::kRelu, 0);
  EXPECT_THROW(evaluate(model, FeatureBatch(Mat::Zero(2, 3))), InvalidInput);
  EXPECT_THROW(FeatureBatch(Mat(0, 3), std::vector<int>{}), InvalidInput);
}

}  // namespace
}  // namespace logcoral
