#pragma once

#include "drbrt/core/chance.hpp"
#include "drbrt/core/containment.hpp"
#include "drbrt/core/propagation.hpp"

#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace drbrt {

/// Outcome of checking a given control law against a scene and goal.
struct FeasibilityReport {
  int steps = 0;
  std::vector<std::vector<double>> state_margins;    // [k][constraint], k < steps
  std::vector<std::vector<double>> control_margins;  // [k][constraint]
  double worst_state_margin = -std::numeric_limits<double>::infinity();
  double worst_control_margin = -std::numeric_limits<double>::infinity();
  bool terminal_mean_ok = false;
  double terminal_mean_value = 0.0;  // point: quadratic form minus one; set: S-procedure value
  double terminal_eigen_gap = 0.0;   // lambda_max(Sigma_N) - lambda_min(Sigma_G)
  bool passed = false;
  std::vector<std::string> violations;
};

namespace detail {

inline double control_margin(const HalfspaceChance& c, const ControlStep& s, const MatrixXd& sigma) {
  return chance_margin(c, s.v, symmetrize(s.K * sigma * s.K.transpose()));
}

inline FeasibilityReport check_common(const LinearSystem& sys, const PlanningScene& scene, const ControlLaw& law,
                                      const std::vector<VectorXd>& means, const std::vector<MatrixXd>& covs,
                                      const std::vector<MatrixXd>* shapes, const AmbiguitySet& goal, double tol) {
  (void)sys;
  FeasibilityReport r;
  r.steps = law.length();
  for (int k = 0; k < r.steps; ++k) {
    std::vector<double> sm, cm;
    for (std::size_t j = 0; j < scene.state_constraints.size(); ++j) {
      const auto& c = scene.state_constraints[j];
      double m = chance_margin(c, means[k], covs[k]);
      if (shapes) m += std::sqrt(std::max(0.0, c.alpha.dot((*shapes)[k] * c.alpha)));
      sm.push_back(m);
      r.worst_state_margin = std::max(r.worst_state_margin, m);
      if (m > tol) {
        std::ostringstream os;
        os << "state constraint " << j << " violated at step " << k << " (margin " << m << ")";
        r.violations.push_back(os.str());
      }
    }
    for (std::size_t j = 0; j < scene.control_constraints.size(); ++j) {
      double m = control_margin(scene.control_constraints[j], law.steps[k], covs[k]);
      cm.push_back(m);
      r.worst_control_margin = std::max(r.worst_control_margin, m);
      if (m > tol) {
        std::ostringstream os;
        os << "control constraint " << j << " violated at step " << k << " (margin " << m << ")";
        r.violations.push_back(os.str());
      }
    }
    r.state_margins.push_back(std::move(sm));
    r.control_margins.push_back(std::move(cm));
  }
  r.terminal_eigen_gap = lambda_max(covs.back()) - lambda_min(goal.covariance);
  if (r.terminal_eigen_gap > tol) {
    std::ostringstream os;
    os << "terminal covariance exceeds goal floor by " << r.terminal_eigen_gap;
    r.violations.push_back(os.str());
  }
  return r;
}

}  // namespace detail

/// Checks a law from a single Gaussian. Terminal mean must lie in the goal mean set.
inline FeasibilityReport validate_trajectory(const LinearSystem& sys, const PlanningScene& scene, const GaussianBelief& init,
                                             const ControlLaw& law, const AmbiguitySet& goal, double tol = 1e-6) {
  require_dims(init.dim() == sys.n() && goal.dim() == sys.n(), "validate_trajectory: dimension mismatch");
  law.validate(sys);
  scene.validate(sys);
  auto means = propagate_mean(sys, init.mean, law);
  auto covs = propagate_covariance(sys, init.covariance, law);
  auto r = detail::check_common(sys, scene, law, means, covs, nullptr, goal, tol);
  r.terminal_mean_value = goal.mean_set.quadratic(means.back()) - 1.0;
  r.terminal_mean_ok = r.terminal_mean_value <= tol;
  if (!r.terminal_mean_ok) r.violations.push_back("terminal mean outside goal mean set");
  r.passed = r.violations.empty();
  return r;
}

/// Checks a law from every Gaussian of an ambiguity set (robust state margins, exact containment).
inline FeasibilityReport validate_ambiguity_trajectory(const LinearSystem& sys, const PlanningScene& scene,
                                                       const AmbiguitySet& init, const ControlLaw& law,
                                                       const AmbiguitySet& goal, double tol = 1e-6) {
  require_dims(init.dim() == sys.n() && goal.dim() == sys.n(), "validate_ambiguity_trajectory: dimension mismatch");
  law.validate(sys);
  scene.validate(sys);
  auto sets = propagate_ellipsoid(sys, init.mean_set, law);
  std::vector<VectorXd> means;
  std::vector<MatrixXd> shapes;
  for (const auto& e : sets) {
    means.push_back(e.center);
    shapes.push_back(e.shape);
  }
  auto covs = propagate_covariance(sys, init.covariance, law);
  auto r = detail::check_common(sys, scene, law, means, covs, &shapes, goal, tol);
  auto cert = containment_certificate(sets.back(), goal.mean_set);
  r.terminal_mean_value = cert.value;
  r.terminal_mean_ok = cert.contained;
  if (!r.terminal_mean_ok) r.violations.push_back("terminal mean set not contained in goal mean set");
  r.passed = r.violations.empty();
  return r;
}

}  // namespace drbrt
