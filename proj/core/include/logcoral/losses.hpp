#pragma once

#include <vector>

#include "logcoral/linalg.hpp"
#include "logcoral/statistics.hpp"

namespace logcoral {

/// Scalar loss value with gradients for both inputs. Shapes follow the
/// inputs: d x d for covariance losses, d x 1 for the mean loss, n x k
/// logits for cross-entropy (grad_target is then empty).
struct LossBundle {
  double value = 0.0;
  Matrix grad_source;
  Matrix grad_target;
};

/// Trade-off weights of the joint objective.
struct LossWeights {
  double classification = 1.0;
  double coral = 0.0;
  double logcoral = 300.0;
  double mean = 20.0;

  /// Throws InvalidInput when a weight is negative or non-finite, or all are zero.
  void validate() const;
  bool uses_second_order() const noexcept { return coral > 0.0 || logcoral > 0.0; }
};

/// (1 / 4d^2) ||C_s - C_t||_F^2 with gradients (1 / 2d^2)(C_s - C_t) and its
/// negation.
LossBundle coral_loss(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t);

/// (1 / 4d^2) ||log(C_s + eps I) - log(C_t + eps I)||_F^2, with gradients
/// taken through both eigendecompositions. epsilon = 0 skips the shift.
/// Throws NotPositiveDefinite when a (shifted) eigenvalue is not positive.
LossBundle logcoral_loss(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t,
                         double epsilon);

/// Shift used when none is configured: the average of default_epsilon over
/// the two covariances.
double default_pair_epsilon(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t);

/// Backward pass of X -> log(X) at X = U diag(values) U^T.
///
/// Given the upstream gradient G = dL/dlog(X), returns dL/dX as
///   U ( sym(P^T o (U^T dU)) + diag(dS) ) U^T
/// with dU = 2 sym(G) U log(S), dS = S^-1 diag(U^T sym(G) U) and P from
/// build_p_matrix. Eigenvalues are floored at `eigen_floor` before the
/// inversion (pass 0 to disable).
SymmetricMatrix log_backward(const EigenPair& eig, const SymmetricMatrix& upstream,
                             double eigen_floor);

/// (1 / 2d) ||mean_s - mean_t||^2; gradients (1 / d)(mean_s - mean_t) and its
/// negation, as d x 1 columns.
LossBundle mean_loss(const Vector& mean_s, const Vector& mean_t);

/// Mean negative log-likelihood of softmax(logits) and its gradient
/// (softmax - onehot) / n in grad_source.
LossBundle softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

/// Chains dL/dC through the sample covariance of `batch`:
///   dL/dD = scale * 2 / (n - 1) * (D - 1 mean^T) sym(dL/dC)
/// `scale` carries the moving-average batch weight.
Matrix chain_to_features(const SymmetricMatrix& loss_grad_cov, const FeatureBatch& batch,
                         double scale = 1.0);

/// Chains dL/dmean through the column mean: every row receives scale * g^T / n.
Matrix chain_mean_to_features(const Vector& loss_grad_mean, const FeatureBatch& batch,
                              double scale = 1.0);

}  // namespace logcoral
