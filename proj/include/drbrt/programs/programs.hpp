#pragma once

#include "drbrt/programs/assembly.hpp"

namespace drbrt::programs {

namespace detail {

inline SteeringSolution extract(const LinearSystem& sys, const Assembled& a, const conic::SolveResult& r) {
  SteeringSolution s;
  for (const auto& e : a.sigma) s.planned_covariances.push_back(symmetrize(r.value(e)));
  for (const auto& e : a.mu) s.planned_centers.push_back(r.value(e));
  for (const auto& e : a.P) s.planned_shapes.push_back(symmetrize(r.value(e)));
  std::vector<VectorXd> v;
  for (std::size_t k = 0; k < a.U.size(); ++k) {
    s.U.push_back(r.value(a.U[k]));
    s.Y.push_back(symmetrize(r.value(a.Y[k])));
    v.push_back(r.value(a.v[k]));
  }
  if (a.tau) s.tau = r.scalar(*a.tau);
  if (a.gamma) s.gamma = r.scalar(*a.gamma);
  s.objective = r.objective;
  s.solver_status = r.status;
  s.iterations = r.iterations;
  s.solve_time_s = r.solve_time_s;
  s.law = recover_controls(s.U, s.planned_covariances, v);
  s.law.validate(sys);
  return s;
}

/// Re-propagates the recovered law and checks every certificate condition.
inline bool post_check(const LinearSystem& sys, const PlanningScene& scene, const Spec& sp, SteeringSolution& s,
                       double tol) {
  const MatrixXd& sigma0 = s.planned_covariances.front();
  auto actual = propagate_covariance(sys, sigma0, s.law);
  double dom = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < actual.size(); ++k) dom = std::min(dom, lambda_min(s.planned_covariances[k] - actual[k]));
  s.dominance_margin = dom;
  if (sp.mean_set == MeanSet::Point) {
    s.report = validate_trajectory(sys, scene, GaussianBelief(sp.mu0, sigma0), s.law, sp.goal, tol);
  } else {
    Ellipsoid e0;
    e0.center = sp.mu0;
    e0.shape = s.planned_shapes.front();
    AmbiguitySet init;
    init.mean_set = e0;
    init.covariance = sigma0;
    s.report = validate_ambiguity_trajectory(sys, scene, init, s.law, sp.goal, tol);
  }
  return s.report.passed && dom >= -tol;
}

inline LinPoints relinearized(const PlanningScene& scene, const SteeringSolution& s, const LinPoints& old, double damping) {
  LinPoints lp = old;
  const int N = scene.horizon;
  auto mix = [&](double o, double fresh) { return std::max(1e-9, (1.0 - damping) * o + damping * fresh); };
  for (int k = 0; k < N; ++k) {
    for (std::size_t j = 0; j < scene.state_constraints.size(); ++j) {
      const VectorXd& al = scene.state_constraints[j].alpha;
      lp.sig[k][j] = mix(old.sig[k][j], al.dot(s.planned_covariances[k] * al));
      if (!s.planned_shapes.empty()) lp.pr[k][j] = mix(old.pr[k][j], al.dot(s.planned_shapes[k] * al));
    }
    for (std::size_t j = 0; j < scene.control_constraints.size(); ++j) {
      const VectorXd& al = scene.control_constraints[j].alpha;
      lp.y[k][j] = mix(old.y[k][j], al.dot(s.Y[k] * al));
    }
  }
  return lp;
}

inline SteeringResult solve_once(const LinearSystem& sys, const PlanningScene& scene, const Spec& sp, const LinPoints& lp,
                                 const ProgramOptions& opt) {
  SteeringResult out;
  Assembled a = assemble(sys, scene, sp, lp, opt);
  conic::SolveResult r = conic::solve(a.prog, opt.solver);
  out.solver_status = r.status;
  out.solve_time_s = r.solve_time_s;
  out.iterations = r.iterations;
  out.detail = r.message;
  switch (r.status) {
    case conic::Status::Infeasible: out.outcome = Outcome::Infeasible; return out;
    case conic::Status::Unbounded: out.outcome = Outcome::Unbounded; return out;
    case conic::Status::SolverError: out.outcome = Outcome::SolverError; return out;
    default: break;
  }
  SteeringSolution s;
  try {
    s = extract(sys, a, r);
  } catch (const std::exception& e) {
    out.outcome = Outcome::Rejected;
    out.detail = e.what();
    log::warn(std::string("steering solution rejected: ") + e.what());
    return out;
  }
  // Inaccurate solutions must clear a ten times stricter post-check.
  double tol = r.status == conic::Status::Optimal ? opt.validation_tol : opt.validation_tol / 10.0;
  if (!post_check(sys, scene, sp, s, tol)) {
    out.outcome = Outcome::Rejected;
    out.detail = s.report.violations.empty() ? "covariance dominance failed" : s.report.violations.front();
    log::warn("steering solution failed post-check: " + out.detail);
    return out;
  }
  out.outcome = Outcome::Solved;
  out.solution = std::move(s);
  return out;
}

inline SteeringResult run(const LinearSystem& sys, const PlanningScene& scene, const Spec& sp,
                          const LinearizationRefs& refs, const ProgramOptions& opt) {
  sys.validate();
  scene.validate(sys);
  refs.validate(sys.n(), sys.m());
  require_dims(sp.mu0.size() == sys.n() && sp.goal.dim() == sys.n(), "steering program: dimension mismatch");
  MatrixXd p_r = refs.p_r.value_or(sp.goal.mean_set.shape);
  LinPoints lp = initial_points(scene, refs, p_r);
  SteeringResult best = solve_once(sys, scene, sp, lp, opt);
  if (!opt.relinearize || !best.ok()) return best;
  for (int pass = 1; pass < opt.relinearize_passes; ++pass) {
    LinPoints next = relinearized(scene, *best.solution, lp, opt.relinearize_damping);
    SteeringResult r = solve_once(sys, scene, sp, next, opt);
    if (!r.ok()) break;
    double change = std::abs(r.solution->objective - best.solution->objective);
    lp = next;
    best = std::move(r);
    if (change <= 1e-6 * std::max(1.0, std::abs(best.solution->objective))) break;
  }
  return best;
}

inline bool point_like(const Ellipsoid& e) { return e.is_point(); }

}  // namespace detail

/// Steers a single Gaussian into the goal ambiguity set.
inline SteeringResult solve_optsteer(const LinearSystem& sys, const PlanningScene& scene, const GaussianBelief& init,
                                     const AmbiguitySet& goal, const LinearizationRefs& refs, const ProgramOptions& opt = {}) {
  detail::Spec sp;
  sp.mu0 = init.mean;
  sp.sigma0 = init.covariance;
  sp.mean_set = detail::MeanSet::Point;
  sp.terminal = detail::point_like(goal.mean_set) ? detail::Terminal::Equality : detail::Terminal::Membership;
  sp.objective = detail::Objective::Cost;
  sp.goal = goal;
  return detail::run(sys, scene, sp, refs, opt);
}

/// Steers every Gaussian of `init` into `goal` (relaxed SDP with the containment LMI).
inline SteeringResult solve_edgesteer(const LinearSystem& sys, const PlanningScene& scene, const AmbiguitySet& init,
                                      const AmbiguitySet& goal, const LinearizationRefs& refs, const ProgramOptions& opt = {}) {
  detail::Spec sp;
  sp.mu0 = init.mean_set.center;
  sp.sigma0 = init.covariance;
  sp.p0 = init.mean_set.shape;
  sp.mean_set = detail::MeanSet::Fixed;
  sp.terminal = detail::Terminal::Containment;
  sp.objective = detail::Objective::Cost;
  sp.goal = goal;
  return detail::run(sys, scene, sp, refs, opt);
}

/// Largest-volume mean ellipsoid around mu_q that can be steered into the goal.
/// The maximizing shape is planned_shapes[0].
inline SteeringResult solve_maxellipsoid(const LinearSystem& sys, const PlanningScene& scene, const VectorXd& mu_q,
                                         const MatrixXd& sigma_q, const AmbiguitySet& goal, const LinearizationRefs& refs,
                                         const ProgramOptions& opt = {}) {
  GaussianBelief(mu_q, sigma_q);
  detail::Spec sp;
  sp.mu0 = mu_q;
  sp.sigma0 = sigma_q;
  sp.mean_set = detail::MeanSet::Free;
  sp.terminal = detail::Terminal::Containment;
  sp.objective = detail::Objective::LogdetP0;
  sp.goal = goal;
  return detail::run(sys, scene, sp, refs, opt);
}

/// Initial covariance with the largest minimum eigenvalue for a fixed mean set.
/// The maximizing covariance is planned_covariances[0].
inline SteeringResult solve_maxcovarell(const LinearSystem& sys, const PlanningScene& scene, const Ellipsoid& init_mean_set,
                                        const AmbiguitySet& goal, const LinearizationRefs& refs, const ProgramOptions& opt = {}) {
  detail::Spec sp;
  sp.mu0 = init_mean_set.center;
  sp.p0 = init_mean_set.shape;
  sp.init_cov = detail::InitCov::Free;
  sp.mean_set = detail::MeanSet::Fixed;
  sp.terminal = detail::Terminal::Containment;
  sp.objective = detail::Objective::MaxLambdaMin;
  sp.goal = goal;
  return detail::run(sys, scene, sp, refs, opt);
}

/// Point-mean variant: exact endpoints mu_0 = mu_q, mu_N = mu_G.
inline SteeringResult solve_maxcovar(const LinearSystem& sys, const PlanningScene& scene, const VectorXd& mu_q,
                                     const GaussianBelief& goal, const LinearizationRefs& refs, const ProgramOptions& opt = {}) {
  detail::Spec sp;
  sp.mu0 = mu_q;
  sp.init_cov = detail::InitCov::Free;
  sp.mean_set = detail::MeanSet::Point;
  sp.terminal = detail::Terminal::Equality;
  sp.objective = detail::Objective::MaxLambdaMin;
  sp.goal = AmbiguitySet::from_belief(goal);
  return detail::run(sys, scene, sp, refs, opt);
}

}  // namespace drbrt::programs
