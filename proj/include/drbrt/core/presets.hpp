#pragma once

#include "drbrt/core/types.hpp"

namespace drbrt::presets {

/// Planar triple integrator, state (x, y, vx, vy, ax, ay), jerk input, D = 0.1 I.
inline LinearSystem triple_integrator_2d(double dt = 0.1, double noise = 0.1) {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  MatrixXd A = MatrixXd::Identity(6, 6);
  A.block(0, 2, 2, 2) = dt * I2;
  A.block(2, 4, 2, 2) = dt * I2;
  MatrixXd B = MatrixXd::Zero(6, 2);
  B.block(4, 0, 2, 2) = dt * I2;
  return LinearSystem(A, B, noise * MatrixXd::Identity(6, 6));
}

/// Box |u_i| <= beta as 2m halfspace chance constraints.
inline std::vector<HalfspaceChance> input_box(int m, double beta, double eps) {
  std::vector<HalfspaceChance> out;
  for (int i = 0; i < m; ++i) {
    for (double s : {1.0, -1.0}) {
      VectorXd a = VectorXd::Zero(m);
      a(i) = s;
      out.emplace_back(a, beta, eps);
    }
  }
  return out;
}

}  // namespace drbrt::presets
