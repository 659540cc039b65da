#pragma once

#include "drbrt/brt/build.hpp"
#include "drbrt/core/presets.hpp"

namespace fixture {

using namespace drbrt;

/// Double integrator configuration small enough for many builds per test.
inline brt::BuildConfig small_config(brt::Variant v, int iterations, std::uint64_t seed) {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  brt::BuildConfig c;
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0.005, 0.1;
  c.system = LinearSystem(A, B, 0.05 * I2);
  c.scene.horizon = 10;
  c.scene.control_constraints = presets::input_box(1, 4.0, 0.05);
  c.goal = AmbiguitySet(Ellipsoid(VectorXd::Zero(2), 0.5 * I2), 0.2 * I2);
  c.variant = v;
  c.iterations = iterations;
  c.seed = seed;
  c.r_sample = (VectorXd(2) << 0.6, 0.6).finished();
  c.sigma_q = 0.05 * I2;
  c.workspace.lo = {-3.0, -3.0};
  c.workspace.hi = {3.0, 3.0};
  c.refs = programs::LinearizationRefs{0.5 * I2, MatrixXd::Constant(1, 1, 1.0), std::nullopt};
  return c;
}

}  // namespace fixture
