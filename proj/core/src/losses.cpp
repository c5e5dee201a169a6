#include "logcoral/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace logcoral {

namespace {

void require_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b, const char* op) {
  if (a.dim() != b.dim()) {
    std::ostringstream os;
    os << op << ": dimension mismatch (" << a.dim() << " vs " << b.dim() << ")";
    throw InvalidInput(os.str());
  }
}

Vector eig_floor_values(const Vector& values, double floor) {
  return floor > 0.0 ? Vector(values.cwiseMax(floor)) : values;
}

}  // namespace

void LossWeights::validate() const {
  const double all[] = {classification, coral, logcoral, mean};
  for (double w : all) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidInput("LossWeights: weights must be finite and non-negative");
    }
  }
  if (classification == 0.0 && coral == 0.0 && logcoral == 0.0 && mean == 0.0) {
    throw InvalidInput("LossWeights: at least one weight must be positive");
  }
}

LossBundle coral_loss(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t) {
  require_same_dim(cov_s, cov_t, "coral_loss");
  const double d = static_cast<double>(cov_s.dim());
  const Matrix diff = cov_s.matrix() - cov_t.matrix();
  LossBundle out;
  out.value = diff.squaredNorm() / (4.0 * d * d);
  out.grad_source = diff / (2.0 * d * d);
  out.grad_target = -out.grad_source;
  return out;
}

SymmetricMatrix log_backward(const EigenPair& eig, const SymmetricMatrix& upstream,
                             double eigen_floor) {
  const Matrix& u = eig.vectors;
  const Vector sigma = eig_floor_values(eig.values, eigen_floor);
  const Matrix g = upstream.matrix();

  const Vector log_sigma = sigma.array().log();
  const Matrix d_u = 2.0 * g * u * log_sigma.asDiagonal();
  const Matrix rotated = u.transpose() * g * u;
  const Matrix d_sigma = Matrix(sigma.cwiseInverse().asDiagonal()) * diag_part(rotated);

  const Matrix p = build_p_matrix(eig.values);
  const Matrix inner = sym_part(p.transpose().cwiseProduct(u.transpose() * d_u)).matrix() +
                       diag_part(d_sigma);
  return SymmetricMatrix::symmetrize(u * inner * u.transpose());
}

double default_pair_epsilon(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t) {
  return 0.5 * (default_epsilon(cov_s) + default_epsilon(cov_t));
}

LossBundle logcoral_loss(const SymmetricMatrix& cov_s, const SymmetricMatrix& cov_t,
                         double epsilon) {
  require_same_dim(cov_s, cov_t, "logcoral_loss");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("logcoral_loss: epsilon must be finite and non-negative");
  }
  const SymmetricMatrix reg_s = epsilon > 0.0 ? regularize_psd(cov_s, epsilon) : cov_s;
  const SymmetricMatrix reg_t = epsilon > 0.0 ? regularize_psd(cov_t, epsilon) : cov_t;

  const EigenPair eig_s = sym_eig(reg_s);
  const EigenPair eig_t = sym_eig(reg_t);
  for (const EigenPair* eig : {&eig_s, &eig_t}) {
    const double smallest = eig->values[0];
    if (!(smallest > 0.0)) {
      std::ostringstream os;
      os << "logcoral_loss: " << (eig == &eig_s ? "source" : "target")
         << " covariance has eigenvalue " << smallest << " after regularization";
      throw NotPositiveDefinite(os.str(), smallest);
    }
  }

  const auto log_of = [](const EigenPair& eig) {
    return Matrix(eig.vectors * eig.values.array().log().matrix().asDiagonal() *
                  eig.vectors.transpose());
  };
  const SymmetricMatrix log_s = SymmetricMatrix::symmetrize(log_of(eig_s));
  const SymmetricMatrix log_t = SymmetricMatrix::symmetrize(log_of(eig_t));

  const double d = static_cast<double>(cov_s.dim());
  const Matrix diff = log_s.matrix() - log_t.matrix();

  LossBundle out;
  out.value = diff.squaredNorm() / (4.0 * d * d);
  const SymmetricMatrix upstream = SymmetricMatrix::symmetrize(diff / (2.0 * d * d));
  const SymmetricMatrix upstream_t = SymmetricMatrix::symmetrize(-upstream.matrix());
  out.grad_source = log_backward(eig_s, upstream, epsilon).matrix();
  out.grad_target = log_backward(eig_t, upstream_t, epsilon).matrix();
  return out;
}

LossBundle mean_loss(const Vector& mean_s, const Vector& mean_t) {
  if (mean_s.size() != mean_t.size() || mean_s.size() == 0) {
    std::ostringstream os;
    os << "mean_loss: length mismatch (" << mean_s.size() << " vs " << mean_t.size() << ")";
    throw InvalidInput(os.str());
  }
  const double d = static_cast<double>(mean_s.size());
  const Vector diff = mean_s - mean_t;
  LossBundle out;
  out.value = diff.squaredNorm() / (2.0 * d);
  out.grad_source = diff / d;
  out.grad_target = -out.grad_source;
  return out;
}

LossBundle softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  if (n == 0 || k == 0) throw InvalidInput("softmax_cross_entropy: empty logits");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw InvalidInput("softmax_cross_entropy: label count differs from row count");
  }

  LossBundle out;
  out.grad_source.resize(n, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= k) {
      std::ostringstream os;
      os << "softmax_cross_entropy: label " << label << " outside [0, " << k << ")";
      throw InvalidInput(os.str());
    }
    const double top = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd shifted = logits.row(i).array() - top;
    const double log_norm = std::log(shifted.array().exp().sum());
    total += log_norm - shifted[label];
    out.grad_source.row(i) = (shifted.array() - log_norm).exp();
    out.grad_source(i, label) -= 1.0;
  }
  out.value = total / static_cast<double>(n);
  out.grad_source /= static_cast<double>(n);
  return out;
}

Matrix chain_to_features(const SymmetricMatrix& loss_grad_cov, const FeatureBatch& batch,
                         double scale) {
  if (loss_grad_cov.dim() != batch.cols()) {
    std::ostringstream os;
    os << "chain_to_features: gradient dim " << loss_grad_cov.dim() << " vs feature dim "
       << batch.cols();
    throw InvalidInput(os.str());
  }
  const Eigen::Index n = batch.rows();
  if (n < 2) throw InvalidInput("chain_to_features: need at least two rows");
  const Matrix centered = batch.data().rowwise() - batch.data().colwise().mean();
  return (scale * 2.0 / static_cast<double>(n - 1)) * centered * loss_grad_cov.matrix();
}

Matrix chain_mean_to_features(const Vector& loss_grad_mean, const FeatureBatch& batch,
                              double scale) {
  if (loss_grad_mean.size() != batch.cols()) {
    throw InvalidInput("chain_mean_to_features: gradient length differs from feature dim");
  }
  const double w = scale / static_cast<double>(batch.rows());
  return Matrix::Ones(batch.rows(), 1) * (w * loss_grad_mean.transpose());
}

}  // namespace logcoral
