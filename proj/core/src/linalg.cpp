#include "logcoral/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace logcoral {

namespace {

void require_square(const Matrix& m, const char* op) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << op << ": expected a non-empty square matrix, got " << m.rows() << "x"
       << m.cols();
    throw InvalidInput(os.str());
  }
}

// Applies a scalar function to the spectrum: U f(S) U^T, symmetrized.
template <typename Fn>
SymmetricMatrix spectral_map(const EigenPair& eig, Fn fn) {
  Vector mapped = eig.values.unaryExpr(fn);
  Matrix out = eig.vectors * mapped.asDiagonal() * eig.vectors.transpose();
  return SymmetricMatrix::symmetrize(out);
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const Matrix& entries) {
  require_square(entries, "SymmetricMatrix");
  if (!entries.allFinite()) {
    throw InvalidInput("SymmetricMatrix: non-finite entry");
  }
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << "SymmetricMatrix: input is not symmetric (max |a_ij - a_ji| = " << asym
       << ")";
    throw InvalidInput(os.str());
  }
  entries_ = 0.5 * (entries + entries.transpose());
}

SymmetricMatrix SymmetricMatrix::symmetrize(const Matrix& m) {
  require_square(m, "SymmetricMatrix::symmetrize");
  return SymmetricMatrix(Matrix(0.5 * (m + m.transpose())), Unchecked{});
}

SymmetricMatrix SymmetricMatrix::identity(Eigen::Index dim) {
  if (dim < 1) throw InvalidInput("SymmetricMatrix::identity: dim must be >= 1");
  return SymmetricMatrix(Matrix::Identity(dim, dim), Unchecked{});
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index dim) {
  if (dim < 1) throw InvalidInput("SymmetricMatrix::zero: dim must be >= 1");
  return SymmetricMatrix(Matrix::Zero(dim, dim), Unchecked{});
}

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& diag) {
  if (diag.size() < 1) throw InvalidInput("SymmetricMatrix::diagonal: empty diagonal");
  return SymmetricMatrix(Matrix(diag.asDiagonal()), Unchecked{});
}

Matrix EigenPair::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

EigenPair sym_eig(const SymmetricMatrix& m) {
  if (!m.all_finite()) throw InvalidInput("sym_eig: non-finite entry");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    // Eigen's tridiagonal QR gives up after 30 sweeps per eigenvalue.
    const auto budget = static_cast<std::size_t>(30 * m.dim());
    throw NumericalFailure("sym_eig: eigensolver did not converge", budget);
  }

  EigenPair out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    Eigen::Index arg = 0;
    out.vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.vectors(arg, c) < 0.0) out.vectors.col(c) *= -1.0;
  }
  return out;
}

SymmetricMatrix regularize_psd(const SymmetricMatrix& m, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidInput("regularize_psd: epsilon must be positive and finite");
  }
  Matrix shifted = m.matrix();
  shifted.diagonal().array() += epsilon;
  return SymmetricMatrix::symmetrize(shifted);
}

double default_epsilon(const SymmetricMatrix& m) {
  const double mean_diag = m.matrix().diagonal().mean();
  return mean_diag > 0.0 ? 1e-6 * mean_diag : 1e-6;
}

SymmetricMatrix matrix_log(const SymmetricMatrix& m) {
  const EigenPair eig = sym_eig(m);
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (!(eig.values[i] > 0.0)) {
      std::ostringstream os;
      os << "matrix_log: eigenvalue " << i << " is " << eig.values[i]
         << "; matrix is not positive definite";
      throw NotPositiveDefinite(os.str(), eig.values[i]);
    }
  }
  return spectral_map(eig, [](double v) { return std::log(v); });
}

SymmetricMatrix matrix_exp(const SymmetricMatrix& m) {
  if (!m.all_finite()) throw InvalidInput("matrix_exp: non-finite entry");
  return spectral_map(sym_eig(m), [](double v) { return std::exp(v); });
}

Matrix build_p_matrix(const Vector& values) {
  const Eigen::Index d = values.size();
  Matrix p = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double gap = values[i] - values[j];
      const double scale = std::max(1.0, std::abs(values[i]));
      if (std::abs(gap) < kDegeneracyThreshold * scale) continue;
      p(i, j) = 1.0 / gap;
      p(j, i) = -p(i, j);
    }
  }
  return p;
}

SymmetricMatrix sym_part(const Matrix& m) {
  require_square(m, "sym_part");
  return SymmetricMatrix::symmetrize(m);
}

Matrix antisym_part(const Matrix& m) {
  require_square(m, "antisym_part");
  return 0.5 * (m - m.transpose());
}

Matrix diag_part(const Matrix& m) {
  require_square(m, "diag_part");
  return Matrix(m.diagonal().asDiagonal());
}

double relative_frobenius_error(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

}  // namespace logcoral
