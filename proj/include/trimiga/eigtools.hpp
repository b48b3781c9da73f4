#ifndef TRIMIGA_EIGTOOLS_HPP
#define TRIMIGA_EIGTOOLS_HPP

#include <vector>

#include "trimiga/core.hpp"

namespace trimiga {

/// Dense submatrix of the rows/columns selected by the mask.
inline Eigen::MatrixXd masked_dense(const Eigen::SparseMatrix<double>& A,
                                    const std::vector<bool>& mask) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(static_cast<int>(i));
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(idx.size(), idx.size());
  std::vector<int> where(mask.size(), -1);
  for (std::size_t k = 0; k < idx.size(); ++k) where[idx[k]] = static_cast<int>(k);
  for (int col = 0; col < A.outerSize(); ++col) {
    if (where[col] < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it)
      if (where[it.row()] >= 0) M(where[it.row()], where[col]) = it.value();
  }
  return M;
}

/// Extreme generalized eigenvalues of A x = lambda B x on the
/// B-nondegenerate subspace. The pencil is first equilibrated by the
/// congruence D A D, D B D with D = diag(B)^{-1/2}, which leaves the
/// eigenvalues unchanged but keeps the energies of severely trimmed basis
/// directions representable; then B is eigendecomposed, directions below
/// 1e-12 * lambda_max(B) are dropped, and the reduced symmetric problem is
/// solved.
inline std::pair<double, double> gen_eig_extremes(const Eigen::MatrixXd& A0,
                                                  const Eigen::MatrixXd& B0) {
  if (A0.rows() == 0) throw numerical_error("gen_eig_extremes: empty pencil");
  Eigen::VectorXd d(B0.rows());
  for (int i = 0; i < B0.rows(); ++i)
    d(i) = (B0(i, i) > 0.0) ? 1.0 / std::sqrt(B0(i, i)) : 1.0;
  const Eigen::MatrixXd A = d.asDiagonal() * A0 * d.asDiagonal();
  const Eigen::MatrixXd B = d.asDiagonal() * B0 * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esB(B);
  if (esB.info() != Eigen::Success)
    throw numerical_error("gen_eig_extremes: B eigendecomposition failed");
  const double bmax = esB.eigenvalues().maxCoeff();
  if (!(bmax > 0.0)) throw numerical_error("gen_eig_extremes: B numerically zero");
  std::vector<int> keep;
  for (int i = 0; i < B.rows(); ++i)
    if (esB.eigenvalues()(i) > 1e-12 * bmax) keep.push_back(i);
  Eigen::MatrixXd T(B.rows(), static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k)
    T.col(k) = esB.eigenvectors().col(keep[k]) / std::sqrt(esB.eigenvalues()(keep[k]));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> red(T.transpose() * A * T,
                                                     Eigen::EigenvaluesOnly);
  return {red.eigenvalues().minCoeff(), red.eigenvalues().maxCoeff()};
}

inline std::pair<double, double> gen_eig_extremes(const Eigen::SparseMatrix<double>& A,
                                                  const Eigen::SparseMatrix<double>& B,
                                                  const std::vector<bool>& mask) {
  return gen_eig_extremes(masked_dense(A, mask), masked_dense(B, mask));
}

/// Spectral condition number |lambda|_max / |lambda|_min of a symmetric
/// matrix, optionally after the symmetric Jacobi rescaling D^-1/2 A D^-1/2.
inline double condition_number(const Eigen::MatrixXd& A, bool jacobi) {
  if (A.rows() == 0) throw numerical_error("condition_number: empty matrix");
  Eigen::MatrixXd M = A;
  if (jacobi) {
    // |diag| keeps the scaling well-defined where heavy trimming drives
    // unstabilized diagonal entries negative
    Eigen::VectorXd d(A.rows());
    for (int i = 0; i < A.rows(); ++i) {
      if (A(i, i) == 0.0)
        throw numerical_error("condition_number: zero diagonal with jacobi set");
      d(i) = 1.0 / std::sqrt(std::abs(A(i, i)));
    }
    M = d.asDiagonal() * A * d.asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  const double lmin = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(lmin > 0.0)) return std::numeric_limits<double>::infinity();
  return lmax / lmin;
}

inline double condition_number(const Eigen::SparseMatrix<double>& A,
                               const std::vector<bool>& mask, bool jacobi) {
  return condition_number(masked_dense(A, mask), jacobi);
}

}  // namespace trimiga

#endif
