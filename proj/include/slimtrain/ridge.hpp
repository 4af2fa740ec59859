#pragma once

// Dense Tikhonov kernel built on a thin SVD. One factorization of the stacked
// matrix M serves the weight solve for every right-hand side and every shift,
// so a regularization-parameter scan costs only matrix-vector work.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace slimtrain {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thin SVD M = U diag(s) V^T with q = min(rows, cols) singular triplets.
template <typename Scalar>
struct RidgeFactors {
  Matrix<Scalar> U;  // rows x q
  Vector<Scalar> s;  // q, descending
  Matrix<Scalar> V;  // cols x q

  Eigen::Index rows() const { return U.rows(); }
  Eigen::Index cols() const { return V.rows(); }
  Eigen::Index rank_bound() const { return s.size(); }
  /// V spans all of R^cols, so nothing lives in the orthogonal complement.
  bool full_column_space() const { return s.size() == V.rows(); }
};

template <typename Derived>
RidgeFactors<typename Derived::Scalar> factorize(
    const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  if (M.rows() < 1 || M.cols() < 1) {
    throw std::invalid_argument("factorize: empty matrix");
  }
  if (!M.allFinite()) {
    throw std::invalid_argument("factorize: non-finite entries");
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(M, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
  RidgeFactors<Scalar> f;
  f.U = svd.matrixU();
  f.s = svd.singularValues();
  f.V = svd.matrixV();
  return f;
}

namespace detail {

template <typename Scalar>
void require_positive_shift(Scalar shift, const char* who) {
  if (!(shift > Scalar(0)) || !std::isfinite(shift)) {
    throw std::invalid_argument(std::string(who) +
                                ": shift must be positive and finite");
  }
}

}  // namespace detail

/// (M^T M + shift I)^{-1} M^T rhs, one column per right-hand side.
template <typename Scalar, typename Derived>
Matrix<Scalar> ridge_solve(const RidgeFactors<Scalar>& f,
                           const Eigen::MatrixBase<Derived>& rhs,
                           Scalar shift) {
  detail::require_positive_shift(shift, "ridge_solve");
  if (rhs.rows() != f.rows()) {
    throw std::invalid_argument("ridge_solve: rhs rows != factor rows");
  }
  const Vector<Scalar> filter =
      f.s.array() / (f.s.array().square() + shift);
  return f.V * (filter.asDiagonal() * (f.U.transpose() * rhs));
}

/// (M^T M + shift I)^{-1} Y for an arbitrary Y with cols(M) rows.
template <typename Scalar, typename Derived>
Matrix<Scalar> shifted_inverse_apply(const RidgeFactors<Scalar>& f,
                                     const Eigen::MatrixBase<Derived>& Y,
                                     Scalar shift) {
  detail::require_positive_shift(shift, "shifted_inverse_apply");
  if (Y.rows() != f.cols()) {
    throw std::invalid_argument("shifted_inverse_apply: dimension mismatch");
  }
  const Matrix<Scalar> proj = f.V.transpose() * Y;
  const Vector<Scalar> inv = (f.s.array().square() + shift).inverse();
  Matrix<Scalar> out = f.V * (inv.asDiagonal() * proj);
  if (!f.full_column_space()) {
    // complement of range(V) sees only the shift
    out += (Y - f.V * proj) / shift;
  }
  return out;
}

/// trace(P^T (M^T M + shift I)^{-1} P). With P = M^T this is the familiar
/// sum of filter factors s_i^2 / (s_i^2 + shift).
template <typename Scalar, typename Derived>
Scalar filtered_trace(const RidgeFactors<Scalar>& f,
                      const Eigen::MatrixBase<Derived>& P, Scalar shift) {
  detail::require_positive_shift(shift, "filtered_trace");
  if (P.rows() != f.cols()) {
    throw std::invalid_argument("filtered_trace: probe rows != factor cols");
  }
  const Matrix<Scalar> proj = f.V.transpose() * P;
  const Vector<Scalar> inv = (f.s.array().square() + shift).inverse();
  Scalar t = (inv.asDiagonal() * proj.array().square().matrix()).sum();
  if (!f.full_column_space()) {
    t += (P - f.V * proj).squaredNorm() / shift;
  }
  return t;
}

/// Pseudo-inverse solve used for the shift -> 0 limit. Singular values below
/// rel_tol * s_max count as zero.
template <typename Scalar>
struct MinNormSolution {
  Matrix<Scalar> x;
  Eigen::Index rank = 0;
};

template <typename Scalar, typename Derived>
MinNormSolution<Scalar> ridge_solve_min_norm(
    const RidgeFactors<Scalar>& f, const Eigen::MatrixBase<Derived>& rhs,
    Scalar rel_tol = Scalar(1e-14)) {
  if (rhs.rows() != f.rows()) {
    throw std::invalid_argument("ridge_solve_min_norm: rhs rows mismatch");
  }
  const Scalar cutoff = f.s.size() > 0 ? rel_tol * f.s(0) : Scalar(0);
  Vector<Scalar> filter = Vector<Scalar>::Zero(f.s.size());
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < f.s.size(); ++i) {
    if (f.s(i) > cutoff) {
      filter(i) = Scalar(1) / f.s(i);
      ++rank;
    }
  }
  return {f.V * (filter.asDiagonal() * (f.U.transpose() * rhs)), rank};
}

}  // namespace slimtrain
