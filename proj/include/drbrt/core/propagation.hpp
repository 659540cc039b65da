#pragma once

#include "drbrt/core/types.hpp"

#include <vector>

namespace drbrt {

namespace detail {
inline void check_law(const LinearSystem& sys, const ControlLaw& law) {
  for (const auto& s : law.steps) {
    require_dims(s.K.rows() == sys.m() && s.K.cols() == sys.n(), "control law gain must be m x n");
    require_dims(s.v.size() == sys.m(), "control law feedforward must have length m");
  }
}
}  // namespace detail

/// Mean trajectory mu_0..mu_N. The feedback term vanishes in expectation.
inline std::vector<VectorXd> propagate_mean(const LinearSystem& sys, const VectorXd& mu0, const ControlLaw& law) {
  require_dims(mu0.size() == sys.n(), "propagate_mean: mu0 must have length n");
  detail::check_law(sys, law);
  std::vector<VectorXd> out;
  out.reserve(law.steps.size() + 1);
  out.push_back(mu0);
  for (const auto& s : law.steps) out.push_back(sys.A * out.back() + sys.B * s.v);
  return out;
}

/// Mean-set ellipsoids; shapes evolve open loop as A P A^T.
inline std::vector<Ellipsoid> propagate_ellipsoid(const LinearSystem& sys, const Ellipsoid& e0, const ControlLaw& law) {
  require_dims(e0.dim() == sys.n(), "propagate_ellipsoid: ellipsoid must have dimension n");
  auto centers = propagate_mean(sys, e0.center, law);
  std::vector<Ellipsoid> out;
  out.reserve(centers.size());
  MatrixXd p = e0.shape;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (k > 0) p = symmetrize(sys.A * p * sys.A.transpose());
    Ellipsoid e;
    e.center = centers[k];
    e.shape = p;
    out.push_back(std::move(e));
  }
  return out;
}

/// Closed-loop covariance Sigma_{k+1} = (A + B K_k) Sigma_k (A + B K_k)^T + D D^T.
inline std::vector<MatrixXd> propagate_covariance(const LinearSystem& sys, const MatrixXd& sigma0, const ControlLaw& law) {
  require_dims(sigma0.rows() == sys.n() && sigma0.cols() == sys.n(), "propagate_covariance: sigma0 must be n x n");
  detail::check_law(sys, law);
  const MatrixXd ddt = sys.D * sys.D.transpose();
  std::vector<MatrixXd> out;
  out.reserve(law.steps.size() + 1);
  out.push_back(symmetrize(sigma0));
  for (const auto& s : law.steps) {
    MatrixXd acl = sys.A + sys.B * s.K;
    out.push_back(symmetrize(acl * out.back() * acl.transpose() + ddt));
  }
  return out;
}

}  // namespace drbrt
