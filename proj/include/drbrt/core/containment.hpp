#pragma once

#include "drbrt/core/types.hpp"

namespace drbrt {

/// Result of the exact S-procedure test for inner ⊆ outer.
struct ContainmentCertificate {
  bool contained = false;
  double lambda = 0.0;  // best multiplier found
  double value = 0.0;   // min over lambda of lambda_max(M(lambda)), scaled; <= 0 means contained
};

/// Exact containment test.
///
/// Map the inner ellipsoid to the unit ball, x = c1 + L1 z. Containment holds
/// iff max_{|z|<=1} z^T Q z + 2 b^T z + c0 <= 0, which by the S-lemma is
/// equivalent to [[Q - lambda I, b], [b^T, c0 + lambda]] <= 0 for some
/// lambda >= 0. The largest eigenvalue of that pencil is convex in lambda and
/// is minimized by bisection on the sign of its derivative.
inline ContainmentCertificate containment_certificate(const Ellipsoid& inner, const Ellipsoid& outer) {
  require_dims(inner.dim() == outer.dim(), "ellipsoid_contains: dimension mismatch");
  const int n = inner.dim();
  Eigen::LLT<MatrixXd> l1(symmetrize(inner.shape));
  MatrixXd L1 = l1.matrixL();
  Eigen::LDLT<MatrixXd> p2(symmetrize(outer.shape));
  VectorXd dc = inner.center - outer.center;
  MatrixXd Q = symmetrize(L1.transpose() * p2.solve(L1));
  VectorXd p2dc = p2.solve(dc);
  VectorXd b = L1.transpose() * p2dc;
  double c0 = dc.dot(p2dc) - 1.0;

  double scale = std::max({1.0, Q.cwiseAbs().maxCoeff(), std::abs(c0), b.cwiseAbs().maxCoeff()});
  MatrixXd M(n + 1, n + 1);
  auto eval = [&](double lam, double& slope) {
    M.topLeftCorner(n, n) = Q - lam * MatrixXd::Identity(n, n);
    M.topRightCorner(n, 1) = b;
    M.bottomLeftCorner(1, n) = b.transpose();
    M(n, n) = c0 + lam;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M / scale);
    VectorXd v = es.eigenvectors().col(n);
    slope = v(n) * v(n) - v.head(n).squaredNorm();
    return es.eigenvalues()(n);
  };

  ContainmentCertificate best;
  double slope = 0.0;
  best.value = eval(0.0, slope);
  best.lambda = 0.0;
  if (slope < 0.0) {
    double lo = 0.0;
    double hi = std::max(1.0, lambda_max(Q));
    double s_hi = 0.0;
    for (int i = 0; i < 200; ++i) {
      double g = eval(hi, s_hi);
      if (g < best.value) best = {false, hi, g};
      if (s_hi >= 0.0) break;
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
      double mid = 0.5 * (lo + hi);
      double s = 0.0;
      double g = eval(mid, s);
      if (g < best.value) best = {false, mid, g};
      if (s < 0.0) lo = mid; else hi = mid;
    }
  }
  best.contained = best.value <= 1e-9;
  return best;
}

/// True iff inner ⊆ outer (exact, up to a 1e-9 relative tolerance).
inline bool ellipsoid_contains(const Ellipsoid& inner, const Ellipsoid& outer) {
  return containment_certificate(inner, outer).contained;
}

}  // namespace drbrt
