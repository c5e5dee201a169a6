#pragma once

#include <optional>
#include <vector>

#include "logcoral/linalg.hpp"

namespace logcoral {

/// n x d matrix of feature rows for one domain, with optional class labels.
class FeatureBatch {
 public:
  /// Throws InvalidInput on empty data, non-finite entries, negative labels
  /// or a label count different from the row count.
  explicit FeatureBatch(Matrix data, std::optional<std::vector<int>> labels = std::nullopt);

  Eigen::Index rows() const noexcept { return data_.rows(); }
  Eigen::Index cols() const noexcept { return data_.cols(); }
  const Matrix& data() const noexcept { return data_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  /// Throws InvalidInput when the batch is unlabeled.
  const std::vector<int>& labels() const;

  /// Rows selected by index, labels carried along.
  FeatureBatch subset(const std::vector<Eigen::Index>& rows) const;
  FeatureBatch without_labels() const;

 private:
  Matrix data_;
  std::optional<std::vector<int>> labels_;
};

/// Exponential moving average of a covariance and mean:
///   next = momentum * previous + (1 - momentum) * batch
/// The first update seeds the state with the batch values verbatim.
class SmoothedStats {
 public:
  static constexpr double kDefaultMomentum = 0.9;

  /// Throws InvalidInput unless dim >= 1 and 0 < momentum < 1.
  explicit SmoothedStats(Eigen::Index dim, double momentum = kDefaultMomentum);

  /// Restores a previously initialized state (checkpoint loading).
  SmoothedStats(SymmetricMatrix cov, Vector mean, double momentum, bool initialized);

  const SymmetricMatrix& cov() const noexcept { return cov_; }
  const Vector& mean() const noexcept { return mean_; }
  double momentum() const noexcept { return momentum_; }
  bool initialized() const noexcept { return initialized_; }
  Eigen::Index dim() const noexcept { return mean_.size(); }

  /// Weight the current batch carries in the next state: 1 before
  /// initialization, (1 - momentum) afterwards. Gradients through the
  /// smoothed statistics are scaled by this factor.
  double batch_weight() const noexcept { return initialized_ ? 1.0 - momentum_ : 1.0; }

 private:
  SymmetricMatrix cov_;
  Vector mean_;
  double momentum_;
  bool initialized_;
};

/// Sample covariance with 1/(n-1) normalization. Throws InvalidInput if n < 2.
SymmetricMatrix batch_covariance(const FeatureBatch& batch);

/// Column means.
Vector batch_mean(const FeatureBatch& batch);

/// Throws InvalidInput when dimensions disagree with the state.
SmoothedStats update_smoothed(const SmoothedStats& state, const SymmetricMatrix& batch_cov,
                              const Vector& batch_mean);

}  // namespace logcoral
