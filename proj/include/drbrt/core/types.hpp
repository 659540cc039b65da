#pragma once

#include "drbrt/core/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drbrt {

/// Discrete-time LTI plant x+ = A x + B u + D w.
struct LinearSystem {
  MatrixXd A, B, D;

  LinearSystem() = default;
  LinearSystem(MatrixXd a, MatrixXd b, MatrixXd d) : A(std::move(a)), B(std::move(b)), D(std::move(d)) {
    validate();
  }

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }

  void validate() const {
    require_dims(A.rows() > 0 && A.rows() == A.cols(), "LinearSystem: A must be square and nonempty");
    require_dims(B.rows() == A.rows() && B.cols() > 0, "LinearSystem: B must be n x m");
    require_dims(D.rows() == A.rows() && D.cols() == A.rows(), "LinearSystem: D must be n x n");
    if (!A.allFinite() || !B.allFinite() || !D.allFinite())
      throw std::invalid_argument("LinearSystem: non-finite entry");
    if (condition_number(A) > 1e12) throw std::invalid_argument("LinearSystem: A is singular or ill-conditioned");
  }
};

/// The set { x : (x-c)^T P^{-1} (x-c) <= 1 }.
struct Ellipsoid {
  static constexpr double kPointScale = 1e-12;

  VectorXd center;
  MatrixXd shape;

  Ellipsoid() = default;
  Ellipsoid(VectorXd c, MatrixXd p) : center(std::move(c)), shape(std::move(p)) { validate(); }

  /// Degenerate ellipsoid standing in for a single point.
  static Ellipsoid point(const VectorXd& c) {
    return Ellipsoid(c, kPointScale * MatrixXd::Identity(c.size(), c.size()));
  }

  int dim() const { return static_cast<int>(center.size()); }
  bool is_point() const { return lambda_max(shape) <= 1e-9; }

  void validate() const {
    require_dims(shape.rows() == center.size() && shape.cols() == center.size(),
                 "Ellipsoid: shape must be n x n with n = dim(center)");
    if (asymmetry(shape) > 1e-9) throw std::invalid_argument("Ellipsoid: shape not symmetric");
    if (!(lambda_min(shape) > 0.0)) throw std::invalid_argument("Ellipsoid: shape not positive definite");
  }

  /// (x-c)^T P^{-1} (x-c)
  double quadratic(const VectorXd& x) const {
    require_dims(x.size() == center.size(), "Ellipsoid::quadratic: dimension mismatch");
    VectorXd d = x - center;
    return d.dot(Eigen::LDLT<MatrixXd>(shape).solve(d));
  }

  bool contains(const VectorXd& x, double tol = 0.0) const { return quadratic(x) <= 1.0 + tol; }
};

struct GaussianBelief {
  VectorXd mean;
  MatrixXd covariance;

  GaussianBelief() = default;
  GaussianBelief(VectorXd mu, MatrixXd cov) : mean(std::move(mu)), covariance(std::move(cov)) { validate(); }

  int dim() const { return static_cast<int>(mean.size()); }

  void validate() const {
    require_dims(covariance.rows() == mean.size() && covariance.cols() == mean.size(),
                 "GaussianBelief: covariance must be n x n");
    if (asymmetry(covariance) > 1e-9) throw std::invalid_argument("GaussianBelief: covariance not symmetric");
    if (!(lambda_min(covariance) > 0.0))
      throw std::invalid_argument("GaussianBelief: covariance not positive definite");
  }
};

/// Gaussians whose mean lies in an ellipsoid and whose covariance is fixed.
struct AmbiguitySet {
  Ellipsoid mean_set;
  MatrixXd covariance;

  AmbiguitySet() = default;
  AmbiguitySet(Ellipsoid e, MatrixXd cov) : mean_set(std::move(e)), covariance(std::move(cov)) { validate(); }

  /// A single Gaussian seen as an ambiguity set with a point mean set.
  static AmbiguitySet from_belief(const GaussianBelief& g) {
    return AmbiguitySet(Ellipsoid::point(g.mean), g.covariance);
  }

  int dim() const { return mean_set.dim(); }
  GaussianBelief center_belief() const { return GaussianBelief(mean_set.center, covariance); }

  void validate() const {
    mean_set.validate();
    GaussianBelief(mean_set.center, covariance);
  }
};

/// P(alpha^T z <= beta) >= 1 - epsilon.
struct HalfspaceChance {
  VectorXd alpha;
  double beta = 0.0;
  double epsilon = 0.05;

  HalfspaceChance() = default;
  HalfspaceChance(VectorXd a, double b, double eps) : alpha(std::move(a)), beta(b), epsilon(eps) { validate(); }

  void validate() const {
    if (alpha.size() == 0 || alpha.cwiseAbs().maxCoeff() == 0.0)
      throw std::invalid_argument("HalfspaceChance: alpha must be nonzero");
    if (!(epsilon >= 0.0 && epsilon <= 0.5)) throw std::invalid_argument("HalfspaceChance: epsilon outside [0, 0.5]");
    if (!std::isfinite(beta) || !alpha.allFinite()) throw std::invalid_argument("HalfspaceChance: non-finite data");
  }
};

struct PlanningScene {
  std::vector<HalfspaceChance> state_constraints;
  std::vector<HalfspaceChance> control_constraints;
  int horizon = 1;

  void validate(const LinearSystem& sys) const {
    if (horizon < 1) throw std::invalid_argument("PlanningScene: horizon must be >= 1");
    for (const auto& c : state_constraints) {
      c.validate();
      require_dims(c.alpha.size() == sys.n(), "PlanningScene: state constraint alpha must have length n");
    }
    for (const auto& c : control_constraints) {
      c.validate();
      require_dims(c.alpha.size() == sys.m(), "PlanningScene: control constraint alpha must have length m");
    }
  }

  PlanningScene with_horizon(int h) const {
    PlanningScene s = *this;
    s.horizon = h;
    return s;
  }
};

struct ControlStep {
  MatrixXd K;
  VectorXd v;
};

/// u_k = K_k (x_k - mu_k) + v_k over a finite horizon.
struct ControlLaw {
  std::vector<ControlStep> steps;

  int length() const { return static_cast<int>(steps.size()); }
  bool empty() const { return steps.empty(); }

  static ControlLaw zeros(const LinearSystem& sys, int len) {
    ControlLaw law;
    law.steps.assign(len, ControlStep{MatrixXd::Zero(sys.m(), sys.n()), VectorXd::Zero(sys.m())});
    return law;
  }

  void validate(const LinearSystem& sys) const {
    if (steps.empty()) throw std::invalid_argument("ControlLaw: empty law");
    for (const auto& s : steps) {
      require_dims(s.K.rows() == sys.m() && s.K.cols() == sys.n(), "ControlLaw: K must be m x n");
      require_dims(s.v.size() == sys.m(), "ControlLaw: v must have length m");
    }
  }
};

}  // namespace drbrt
