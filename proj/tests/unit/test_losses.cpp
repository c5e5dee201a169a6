#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logcoral/losses.hpp"
#include "oracles.hpp"

namespace logcoral {
namespace {

using testing::Mat;
using testing::Vec;

// Log-Euclidean loss evaluated entirely through the Jacobi oracle.
double oracle_logcoral(const Mat& cs, const Mat& ct, double eps) {
  const Eigen::Index d = cs.rows();
  const Mat id = Mat::Identity(d, d);
  const Mat diff = testing::jacobi_logm(cs + eps * id) - testing::jacobi_logm(ct + eps * id);
  return diff.squaredNorm() / (4.0 * d * d);
}

Mat random_spd(std::mt19937_64& rng, Eigen::Index d, double lo = 0.2, double hi = 4.0,
               double gap = 1e-3) {
  return testing::with_spectrum(rng, testing::spaced_spectrum(rng, d, lo, hi, gap));
}

TEST(CoralLoss, IdenticalInputsGiveExactZero) {
  std::mt19937_64 rng(61);
  const SymmetricMatrix c(random_spd(rng, 4));
  const LossBundle out = coral_loss(c, c);
  EXPECT_EQ(out.value, 0.0);
  EXPECT_EQ(out.grad_source.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.grad_target.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CoralLoss, ScalarCase) {
  const LossBundle out = coral_loss(SymmetricMatrix(Mat::Constant(1, 1, 3.0)),
                                    SymmetricMatrix(Mat::Constant(1, 1, 1.0)));
  EXPECT_DOUBLE_EQ(out.value, 1.0);
  EXPECT_DOUBLE_EQ(out.grad_source(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.grad_target(0, 0), -1.0);
}

TEST(CoralLoss, DimensionMismatch) {
  EXPECT_THROW(coral_loss(SymmetricMatrix::identity(2), SymmetricMatrix::identity(3)),
               InvalidInput);
}

TEST(CoralLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat cs = testing::random_symmetric(rng, 5);
    const Mat ct = testing::random_symmetric(rng, 5);
    const LossBundle out = coral_loss(SymmetricMatrix(cs), SymmetricMatrix(ct));
    const auto fs = [&](const Mat& x) { return (x - ct).squaredNorm() / 100.0; };
    const auto ft = [&](const Mat& x) { return (cs - x).squaredNorm() / 100.0; };
    EXPECT_LE(testing::max_relative_error(out.grad_source, testing::fd_symmetric_gradient(fs, cs, 1e-5)), 1e-6);
    EXPECT_LE(testing::max_relative_error(out.grad_target, testing::fd_symmetric_gradient(ft, ct, 1e-5)), 1e-6);
  }
}

TEST(LogcoralLoss, IdenticalInputsGiveExactZero) {
  std::mt19937_64 rng(71);
  const SymmetricMatrix c(random_spd(rng, 6));
  const LossBundle out = logcoral_loss(c, c, 1e-6);
  EXPECT_EQ(out.value, 0.0);
  EXPECT_EQ(out.grad_source.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.grad_target.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LogcoralLoss, ScalarLogCase) {
  const LossBundle out = logcoral_loss(SymmetricMatrix(Mat::Constant(1, 1, std::exp(2.0))),
                                       SymmetricMatrix::identity(1), 0.0);
  EXPECT_NEAR(out.value, 1.0, 1e-15);
  // d/dc (log c - 0)^2 / 4 = (log c) / (2c)
  EXPECT_NEAR(out.grad_source(0, 0), 2.0 / (2.0 * std::exp(2.0)), 1e-15);
  EXPECT_NEAR(out.grad_target(0, 0), -2.0 / 2.0, 1e-15);
}

TEST(LogcoralLoss, RejectsIndefiniteInput) {
  Vec diag(2);
  diag << 1.0, -1.0;
  EXPECT_THROW(logcoral_loss(SymmetricMatrix::diagonal(diag), SymmetricMatrix::identity(2), 0.0),
               NotPositiveDefinite);
  EXPECT_THROW(logcoral_loss(SymmetricMatrix::identity(2), SymmetricMatrix::zero(2), 0.0),
               NotPositiveDefinite);
  // Regularization lifts a PSD singular matrix into the SPD cone.
  EXPECT_NO_THROW(logcoral_loss(SymmetricMatrix::identity(2), SymmetricMatrix::zero(2), 1e-3));
  EXPECT_THROW(logcoral_loss(SymmetricMatrix::identity(2), SymmetricMatrix::identity(2), -1.0),
               InvalidInput);
}

TEST(LogcoralLoss, ValueMatchesJacobiOracle) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat cs = random_spd(rng, 7);
    const Mat ct = random_spd(rng, 7);
    const double eps = 1e-4;
    EXPECT_NEAR(logcoral_loss(SymmetricMatrix(cs), SymmetricMatrix(ct), eps).value,
                oracle_logcoral(cs, ct, eps), 1e-12);
  }
}

TEST(LogcoralLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat cs = random_spd(rng, 5);
    const Mat ct = random_spd(rng, 5);
    const double eps = 1e-6;
    const LossBundle out = logcoral_loss(SymmetricMatrix(cs), SymmetricMatrix(ct), eps);
    const auto fs = [&](const Mat& x) { return oracle_logcoral(x, ct, eps); };
    const auto ft = [&](const Mat& x) { return oracle_logcoral(cs, x, eps); };
    EXPECT_LE(testing::max_relative_error(out.grad_source, testing::fd_symmetric_gradient(fs, cs, 1e-5)), 1e-4);
    EXPECT_LE(testing::max_relative_error(out.grad_target, testing::fd_symmetric_gradient(ft, ct, 1e-5)), 1e-4);
  }
}

TEST(LogBackward, MatchesDividedDifferenceForm) {
  // dL/dX = U (F o (U^T G U)) U^T with F_ij the divided difference of log.
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat x = random_spd(rng, 6, 0.1, 3.0, 1e-2);
    const Mat g = testing::random_symmetric(rng, 6);
    const auto [values, vectors] = testing::jacobi_eigen(x);
    Mat f(6, 6);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        f(i, j) = i == j ? 1.0 / values[i]
                         : (std::log(values[i]) - std::log(values[j])) / (values[i] - values[j]);
      }
    }
    const Mat expected = vectors * f.cwiseProduct(vectors.transpose() * g * vectors) * vectors.transpose();
    const EigenPair eig = sym_eig(SymmetricMatrix(x));
    const Mat got = log_backward(eig, SymmetricMatrix(g), 0.0).matrix();
    EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-10 * expected.cwiseAbs().maxCoeff());
  }
}

TEST(LogBackward, RepeatedEigenvaluesStayFinite) {
  const EigenPair eig = sym_eig(SymmetricMatrix::identity(4));
  std::mt19937_64 rng(89);
  const Mat g = testing::random_symmetric(rng, 4);
  const Mat out = log_backward(eig, SymmetricMatrix(g), 0.0).matrix();
  EXPECT_TRUE(out.allFinite());
  // At X = I, log has derivative identity on the diagonal of U^T G U.
  EXPECT_NEAR(out.trace(), g.trace(), 1e-12);
}

TEST(MeanLoss, Examples) {
  const Vec a = Vec::Ones(2);
  const Vec b = Vec::Zero(2);
  const LossBundle out = mean_loss(a, b);
  EXPECT_DOUBLE_EQ(out.value, 0.5);
  EXPECT_DOUBLE_EQ(out.grad_source(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.grad_source(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(out.grad_target(0, 0), -0.5);

  const LossBundle same = mean_loss(a, a);
  EXPECT_EQ(same.value, 0.0);
  EXPECT_EQ(same.grad_source.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(mean_loss(Vec::Ones(2), Vec::Ones(3)), InvalidInput);
}

TEST(MeanLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(97);
  const Vec ms = testing::gaussian(rng, 6, 1);
  const Vec mt = testing::gaussian(rng, 6, 1);
  const LossBundle out = mean_loss(ms, mt);
  const auto fs = [&](const Mat& x) { return (Vec(x) - mt).squaredNorm() / 12.0; };
  EXPECT_LE(testing::max_relative_error(out.grad_source, testing::fd_gradient(fs, ms, 1e-5)), 1e-8);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogK) {
  const LossBundle out = softmax_cross_entropy(Mat::Zero(3, 4), {0, 1, 3});
  EXPECT_NEAR(out.value, std::log(4.0), 1e-15);
}

TEST(SoftmaxCrossEntropy, ConfidentCorrectLogitsApproachZero) {
  Mat logits = Mat::Zero(2, 3);
  logits(0, 2) = 60.0;
  logits(1, 0) = 60.0;
  const LossBundle out = softmax_cross_entropy(logits, {2, 0});
  EXPECT_LT(out.value, 1e-20);
  EXPECT_GE(out.value, 0.0);
}

TEST(SoftmaxCrossEntropy, RejectsOutOfRangeLabels) {
  EXPECT_THROW(softmax_cross_entropy(Mat::Zero(2, 3), {0, 3}), InvalidInput);
  EXPECT_THROW(softmax_cross_entropy(Mat::Zero(2, 3), {0}), InvalidInput);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(101);
  const Mat logits = 2.0 * testing::gaussian(rng, 5, 4);
  const std::vector<int> labels{0, 3, 1, 1, 2};
  const LossBundle out = softmax_cross_entropy(logits, labels);
  const auto f = [&](const Mat& x) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      total += -x(i, labels[i]) + std::log(x.row(i).array().exp().sum());
    }
    return total / x.rows();
  };
  EXPECT_LE(testing::max_relative_error(out.grad_source, testing::fd_gradient(f, logits, 1e-5)), 1e-6);
}

TEST(ChainToFeatures, ZeroCases) {
  std::mt19937_64 rng(103);
  const FeatureBatch batch(testing::gaussian(rng, 6, 3));
  EXPECT_EQ(chain_to_features(SymmetricMatrix::zero(3), batch).cwiseAbs().maxCoeff(), 0.0);
  const FeatureBatch constant(Mat::Constant(6, 3, 2.5));
  EXPECT_EQ(chain_to_features(SymmetricMatrix::identity(3), constant).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(chain_to_features(SymmetricMatrix::identity(2), batch), InvalidInput);
}

TEST(ChainToFeatures, EndToEndLogcoralMatchesFiniteDifferences) {
  std::mt19937_64 rng(107);
  const Mat ds = testing::gaussian(rng, 12, 4);
  const Mat dt = testing::gaussian(rng, 10, 4) * 1.5;
  const double eps = 1e-6;
  const auto loss_of = [&](const Mat& source, const Mat& target) {
    return oracle_logcoral(testing::naive_covariance(source), testing::naive_covariance(target), eps);
  };
  const LossBundle out = logcoral_loss(batch_covariance(FeatureBatch(ds)),
                                       batch_covariance(FeatureBatch(dt)), eps);
  const Mat gs = chain_to_features(SymmetricMatrix::symmetrize(out.grad_source), FeatureBatch(ds));
  const Mat gt = chain_to_features(SymmetricMatrix::symmetrize(out.grad_target), FeatureBatch(dt));
  const Mat fd_s = testing::fd_gradient([&](const Mat& x) { return loss_of(x, dt); }, ds, 1e-5);
  const Mat fd_t = testing::fd_gradient([&](const Mat& x) { return loss_of(ds, x); }, dt, 1e-5);
  EXPECT_LE(testing::max_relative_error(gs, fd_s), 1e-4);
  EXPECT_LE(testing::max_relative_error(gt, fd_t), 1e-4);
}

TEST(ChainMeanToFeatures, MatchesFiniteDifferences) {
  std::mt19937_64 rng(109);
  const Mat ds = testing::gaussian(rng, 8, 3);
  const Vec mt = testing::gaussian(rng, 3, 1);
  const LossBundle out = mean_loss(batch_mean(FeatureBatch(ds)), mt);
  const Mat g = chain_mean_to_features(Vec(out.grad_source), FeatureBatch(ds));
  const auto f = [&](const Mat& x) {
    return (Vec(x.colwise().mean().transpose()) - mt).squaredNorm() / 6.0;
  };
  EXPECT_LE(testing::max_relative_error(g, testing::fd_gradient(f, ds, 1e-5)), 1e-8);
}

TEST(LossProperties, SwapSymmetry) {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 10; ++trial) {
    const SymmetricMatrix a(random_spd(rng, 5));
    const SymmetricMatrix b(random_spd(rng, 5));
    for (const auto& [ab, ba] : {std::pair{coral_loss(a, b), coral_loss(b, a)},
                                 std::pair{logcoral_loss(a, b, 1e-6), logcoral_loss(b, a, 1e-6)}}) {
      EXPECT_NEAR(ab.value, ba.value, 1e-12);
      EXPECT_LE((ab.grad_source - ba.grad_target).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((ab.grad_target - ba.grad_source).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(LossProperties, LogcoralInvariantUnderCommonRotation) {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = random_spd(rng, 6);
    const Mat b = random_spd(rng, 6);
    const Mat q = testing::random_orthogonal(rng, 6);
    const double base = logcoral_loss(SymmetricMatrix(a), SymmetricMatrix(b), 1e-6).value;
    const double rotated = logcoral_loss(SymmetricMatrix::symmetrize(q * a * q.transpose()),
                                         SymmetricMatrix::symmetrize(q * b * q.transpose()), 1e-6)
                               .value;
    EXPECT_NEAR(rotated, base, 1e-8);
  }
}

TEST(LossProperties, CoralAndLogcoralAgreeNearIdentity) {
  std::mt19937_64 rng(131);
  const double t = 1e-3;
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = testing::random_symmetric(rng, 4);
    const Mat b = testing::random_symmetric(rng, 4);
    const SymmetricMatrix cs(Mat(Mat::Identity(4, 4) + t * a));
    const SymmetricMatrix ct(Mat(Mat::Identity(4, 4) + t * b));
    const double coral = coral_loss(cs, ct).value;
    const double logc = logcoral_loss(cs, ct, 0.0).value;
    EXPECT_NEAR(logc / coral, 1.0, 0.1);
    // Both are quadratic in t with leading coefficient |a - b|^2 / (4 d^2).
    EXPECT_NEAR(coral / (t * t), (a - b).squaredNorm() / 64.0, 1e-9);
  }
}

TEST(LossWeights, Validation) {
  EXPECT_NO_THROW(LossWeights{}.validate());
  EXPECT_THROW((LossWeights{0, 0, 0, 0}.validate()), InvalidInput);
  EXPECT_THROW((LossWeights{1, -1, 0, 0}.validate()), InvalidInput);
  EXPECT_THROW((LossWeights{1, 0, NAN, 0}.validate()), InvalidInput);
}

}  // namespace
}  // namespace logcoral
