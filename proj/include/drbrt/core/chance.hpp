#pragma once

#include "drbrt/core/log.hpp"
#include "drbrt/core/normal.hpp"
#include "drbrt/core/types.hpp"

namespace drbrt {

inline double chance_quantile(const HalfspaceChance& c) { return inverse_normal_cdf(1.0 - c.epsilon); }

/// Phi^{-1}(1-eps) * sqrt(a^T S a) + a^T mu - beta. Satisfied iff <= 0.
inline double chance_margin(const HalfspaceChance& c, const VectorXd& mean, const MatrixXd& cov) {
  require_dims(mean.size() == c.alpha.size(), "chance_margin: mean has wrong length");
  require_dims(cov.rows() == c.alpha.size() && cov.cols() == c.alpha.size(), "chance_margin: covariance has wrong shape");
  double var = c.alpha.dot(cov * c.alpha);
  if (var < 0.0) {
    log::warn("chance_margin: negative variance clamped to zero");
    var = 0.0;
  }
  double lin = c.alpha.dot(mean) - c.beta;
  if (var == 0.0) return lin;
  return chance_quantile(c) * std::sqrt(var) + lin;
}

/// sup over mu in R(c, P) of alpha^T mu.
inline double robust_sup_linear(const Ellipsoid& e, const VectorXd& alpha) {
  require_dims(alpha.size() == e.dim(), "robust_sup_linear: alpha has wrong length");
  return alpha.dot(e.center) + std::sqrt(std::max(0.0, alpha.dot(e.shape * alpha)));
}

}  // namespace drbrt
