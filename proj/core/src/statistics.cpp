#include "logcoral/statistics.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace logcoral {

FeatureBatch::FeatureBatch(Matrix data, std::optional<std::vector<int>> labels)
    : data_(std::move(data)), labels_(std::move(labels)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw InvalidInput("FeatureBatch: need at least one row and one column");
  }
  if (!data_.allFinite()) throw InvalidInput("FeatureBatch: non-finite feature value");
  if (labels_) {
    if (static_cast<Eigen::Index>(labels_->size()) != data_.rows()) {
      std::ostringstream os;
      os << "FeatureBatch: " << labels_->size() << " labels for " << data_.rows() << " rows";
      throw InvalidInput(os.str());
    }
    for (int label : *labels_) {
      if (label < 0) throw InvalidInput("FeatureBatch: negative label");
    }
  }
}

const std::vector<int>& FeatureBatch::labels() const {
  if (!labels_) throw InvalidInput("FeatureBatch: batch has no labels");
  return *labels_;
}

FeatureBatch FeatureBatch::subset(const std::vector<Eigen::Index>& rows) const {
  Matrix picked(static_cast<Eigen::Index>(rows.size()), data_.cols());
  std::optional<std::vector<int>> picked_labels;
  if (labels_) picked_labels.emplace();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= data_.rows()) {
      throw InvalidInput("FeatureBatch::subset: row index out of range");
    }
    picked.row(static_cast<Eigen::Index>(r)) = data_.row(rows[r]);
    if (labels_) picked_labels->push_back((*labels_)[static_cast<std::size_t>(rows[r])]);
  }
  return FeatureBatch(std::move(picked), std::move(picked_labels));
}

FeatureBatch FeatureBatch::without_labels() const { return FeatureBatch(data_); }

SmoothedStats::SmoothedStats(Eigen::Index dim, double momentum)
    : cov_(SymmetricMatrix::zero(std::max<Eigen::Index>(dim, 1))),
      mean_(Vector::Zero(dim)),
      momentum_(momentum),
      initialized_(false) {
  if (dim < 1) throw InvalidInput("SmoothedStats: dim must be >= 1");
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw InvalidInput("SmoothedStats: momentum must lie strictly between 0 and 1");
  }
}

SmoothedStats::SmoothedStats(SymmetricMatrix cov, Vector mean, double momentum, bool initialized)
    : cov_(std::move(cov)), mean_(std::move(mean)), momentum_(momentum), initialized_(initialized) {
  if (cov_.dim() != mean_.size()) {
    throw InvalidInput("SmoothedStats: covariance and mean dimensions differ");
  }
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw InvalidInput("SmoothedStats: momentum must lie strictly between 0 and 1");
  }
}

SymmetricMatrix batch_covariance(const FeatureBatch& batch) {
  const Eigen::Index n = batch.rows();
  if (n < 2) throw InvalidInput("batch_covariance: need at least two rows");
  const Matrix centered = batch.data().rowwise() - batch.data().colwise().mean();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return SymmetricMatrix::symmetrize(cov);
}

Vector batch_mean(const FeatureBatch& batch) { return batch.data().colwise().mean().transpose(); }

SmoothedStats update_smoothed(const SmoothedStats& state, const SymmetricMatrix& batch_cov,
                              const Vector& batch_mean) {
  if (batch_cov.dim() != state.dim() || batch_mean.size() != state.dim()) {
    std::ostringstream os;
    os << "update_smoothed: state has dim " << state.dim() << ", batch has covariance dim "
       << batch_cov.dim() << " and mean length " << batch_mean.size();
    throw InvalidInput(os.str());
  }
  if (!state.initialized()) {
    return SmoothedStats(batch_cov, batch_mean, state.momentum(), true);
  }
  const double m = state.momentum();
  const Matrix cov = m * state.cov().matrix() + (1.0 - m) * batch_cov.matrix();
  const Vector mean = m * state.mean() + (1.0 - m) * batch_mean;
  return SmoothedStats(SymmetricMatrix::symmetrize(cov), mean, m, true);
}

}  // namespace logcoral
