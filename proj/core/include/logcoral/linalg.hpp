#pragma once

#include <Eigen/Dense>

#include "logcoral/error.hpp"

namespace logcoral {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense d x d symmetric matrix. Entries are exactly symmetric after
/// construction; the checked constructor rejects inputs whose asymmetry
/// exceeds a small relative tolerance.
class SymmetricMatrix {
 public:
  /// Rejects non-square, empty, or asymmetric input (relative tolerance
  /// 1e-12 of the largest entry). Accepted input is stored symmetrized.
  explicit SymmetricMatrix(const Matrix& entries);

  /// Stores 0.5 * (m + m^T) without checking symmetry.
  static SymmetricMatrix symmetrize(const Matrix& m);

  static SymmetricMatrix identity(Eigen::Index dim);
  static SymmetricMatrix zero(Eigen::Index dim);
  static SymmetricMatrix diagonal(const Vector& diag);

  Eigen::Index dim() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

  bool all_finite() const { return entries_.allFinite(); }

 private:
  struct Unchecked {};
  SymmetricMatrix(Matrix entries, Unchecked) : entries_(std::move(entries)) {}

  Matrix entries_;
};

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
struct EigenPair {
  Vector values;
  Matrix vectors;

  /// vectors * diag(values) * vectors^T
  Matrix reconstruct() const;
};

/// Symmetric eigendecomposition. Column signs are fixed so that the
/// largest-magnitude entry of each eigenvector is positive.
/// Throws InvalidInput on non-finite entries, NumericalFailure if the
/// solver does not converge.
EigenPair sym_eig(const SymmetricMatrix& m);

/// Returns m + epsilon * I. Throws InvalidInput unless epsilon > 0.
SymmetricMatrix regularize_psd(const SymmetricMatrix& m, double epsilon);

/// 1e-6 times the mean diagonal entry of m, or 1e-6 when that mean is not
/// positive.
double default_epsilon(const SymmetricMatrix& m);

/// U log(S) U^T. Throws NotPositiveDefinite naming the first eigenvalue <= 0.
SymmetricMatrix matrix_log(const SymmetricMatrix& m);

/// U exp(S) U^T. Throws InvalidInput on non-finite entries.
SymmetricMatrix matrix_exp(const SymmetricMatrix& m);

/// Relative gap below which two eigenvalues are treated as repeated by
/// build_p_matrix: |a - b| < kDegeneracyThreshold * max(1, |a|).
inline constexpr double kDegeneracyThreshold = 1e-10;

/// P(i, j) = 1 / (values[i] - values[j]) off the diagonal, zero on the
/// diagonal and for (near-)repeated pairs. The result is antisymmetric.
Matrix build_p_matrix(const Vector& values);

/// 0.5 * (m + m^T). Throws InvalidInput for non-square m.
SymmetricMatrix sym_part(const Matrix& m);

/// 0.5 * (m - m^T). Throws InvalidInput for non-square m.
Matrix antisym_part(const Matrix& m);

/// Keeps the diagonal of m and zeroes the rest. Throws InvalidInput for
/// non-square m.
Matrix diag_part(const Matrix& m);

/// Frobenius norm of a - b, relative to the norm of b (absolute when b = 0).
double relative_frobenius_error(const Matrix& a, const Matrix& b);

}  // namespace logcoral
