#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace drbrt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thrown when operands have incompatible shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline double asymmetry(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

inline VectorXd sym_eigenvalues(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double lambda_min(const MatrixXd& m) { return sym_eigenvalues(m).minCoeff(); }
inline double lambda_max(const MatrixXd& m) { return sym_eigenvalues(m).maxCoeff(); }

/// True when b - a is PSD up to `tol` (absolute on the smallest eigenvalue).
inline bool loewner_leq(const MatrixXd& a, const MatrixXd& b, double tol = 1e-8) {
  return lambda_min(b - a) >= -tol;
}

inline MatrixXd spd_inverse(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) {
    return symmetrize(m).completeOrthogonalDecomposition().pseudoInverse();
  }
  return symmetrize(llt.solve(MatrixXd::Identity(m.rows(), m.cols())));
}

/// Symmetric square root via eigendecomposition; negative eigenvalues are clipped.
inline MatrixXd spd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline MatrixXd matrix_power(const MatrixXd& a, int k) {
  MatrixXd out = MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 0; i < k; ++i) out = a * out;
  return out;
}

inline double condition_number(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a);
  const VectorXd& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  double lo = s(s.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / lo;
}

}  // namespace drbrt
