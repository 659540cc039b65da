#pragma once

#include "drbrt/conic/barrier.hpp"
#include "drbrt/core/validation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drbrt::programs {

using conic::AffineMatrix;

/// Reference points of the square-root tangent linearizations.
struct LinearizationRefs {
  MatrixXd sigma_r;               // n x n
  MatrixXd y_r;                   // m x m
  std::optional<MatrixXd> p_r;    // n x n; defaults to the goal mean-set shape

  static LinearizationRefs defaults(int n, int m) {
    return {1.2 * MatrixXd::Identity(n, n), 15.0 * MatrixXd::Identity(m, m), std::nullopt};
  }

  void validate(int n, int m) const {
    require_dims(sigma_r.rows() == n && sigma_r.cols() == n, "LinearizationRefs: sigma_r must be n x n");
    require_dims(y_r.rows() == m && y_r.cols() == m, "LinearizationRefs: y_r must be m x m");
    if (lambda_min(sigma_r) <= 0.0 || lambda_min(y_r) <= 0.0) throw std::invalid_argument("LinearizationRefs: references must be PD");
    if (p_r) {
      require_dims(p_r->rows() == n && p_r->cols() == n, "LinearizationRefs: p_r must be n x n");
      if (lambda_min(*p_r) <= 0.0) throw std::invalid_argument("LinearizationRefs: p_r must be PD");
    }
  }
};

struct ProgramOptions {
  std::optional<MatrixXd> Q;  // state weight, default 0
  std::optional<MatrixXd> R;  // input weight, default I
  conic::SolverSettings solver;
  double validation_tol = 1e-6;
  bool relinearize = false;
  int relinearize_passes = 5;
  double relinearize_damping = 0.5;
};

enum class Outcome { Solved, Infeasible, Unbounded, Rejected, SolverError };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Solved: return "solved";
    case Outcome::Infeasible: return "infeasible";
    case Outcome::Unbounded: return "unbounded";
    case Outcome::Rejected: return "rejected";
    case Outcome::SolverError: return "solver_error";
  }
  return "unknown";
}

struct SteeringSolution {
  ControlLaw law;
  std::vector<MatrixXd> planned_covariances;  // Sigma~_0..Sigma~_N
  std::vector<VectorXd> planned_centers;      // mu_0..mu_N
  std::vector<MatrixXd> planned_shapes;       // P_0..P_N (empty for point-mean programs)
  std::vector<MatrixXd> U, Y;
  double tau = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double objective = 0.0;
  conic::Status solver_status = conic::Status::SolverError;
  int iterations = 0;
  double solve_time_s = 0.0;
  double dominance_margin = 0.0;  // min_k lambda_min(Sigma~_k - Sigma_k)
  FeasibilityReport report;       // post-check against the goal
};

struct SteeringResult {
  Outcome outcome = Outcome::SolverError;
  std::optional<SteeringSolution> solution;
  conic::Status solver_status = conic::Status::SolverError;
  std::string detail;
  double solve_time_s = 0.0;
  int iterations = 0;

  bool ok() const { return outcome == Outcome::Solved && solution.has_value(); }
  const SteeringSolution& get() const {
    if (!ok()) throw std::logic_error("SteeringResult: no solution (" + std::string(to_string(outcome)) + ")");
    return *solution;
  }
};

/// K_k = U_k Sigma_k^{-1}; a 1e-9 ridge is added when Sigma_k is ill-conditioned.
inline ControlLaw recover_controls(const std::vector<MatrixXd>& U, const std::vector<MatrixXd>& sigma,
                                   const std::vector<VectorXd>& v) {
  require_dims(U.size() == v.size() && sigma.size() >= U.size(), "recover_controls: sequence lengths differ");
  ControlLaw law;
  for (std::size_t k = 0; k < U.size(); ++k) {
    const MatrixXd& S = sigma[k];
    require_dims(S.rows() == S.cols() && U[k].cols() == S.rows() && v[k].size() == U[k].rows(),
                 "recover_controls: shape mismatch");
    MatrixXd Ss = symmetrize(S);
    if (condition_number(Ss) > 1e12) Ss += 1e-9 * MatrixXd::Identity(S.rows(), S.cols());
    Eigen::LDLT<MatrixXd> ldlt(Ss);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || lambda_min(Ss) <= 0.0)
      throw std::runtime_error("recover_controls: planned covariance is singular");
    MatrixXd K = ldlt.solve(U[k].transpose()).transpose();
    if (!K.allFinite()) throw std::runtime_error("recover_controls: non-finite gain");
    law.steps.push_back({K, v[k]});
  }
  return law;
}

namespace detail {

enum class InitCov { Fixed, Free };
enum class MeanSet { Point, Fixed, Free };
enum class Terminal { Containment, Membership, Equality };
enum class Objective { Cost, LogdetP0, MaxLambdaMin };

struct Spec {
  VectorXd mu0;
  MatrixXd sigma0;  // used when InitCov::Fixed
  MatrixXd p0;      // used when MeanSet::Fixed
  InitCov init_cov = InitCov::Fixed;
  MeanSet mean_set = MeanSet::Point;
  Terminal terminal = Terminal::Containment;
  Objective objective = Objective::Cost;
  AmbiguitySet goal;
};

/// Reference scalars alpha^T S_r alpha per (step, constraint).
struct LinPoints {
  std::vector<std::vector<double>> sig, pr, y;
};

inline LinPoints initial_points(const PlanningScene& scene, const LinearizationRefs& refs, const MatrixXd& p_r) {
  LinPoints lp;
  const int N = scene.horizon;
  lp.sig.assign(N, {});
  lp.pr.assign(N, {});
  lp.y.assign(N, {});
  for (int k = 0; k < N; ++k) {
    for (const auto& c : scene.state_constraints) {
      lp.sig[k].push_back(c.alpha.dot(refs.sigma_r * c.alpha));
      lp.pr[k].push_back(c.alpha.dot(p_r * c.alpha));
    }
    for (const auto& c : scene.control_constraints) lp.y[k].push_back(c.alpha.dot(refs.y_r * c.alpha));
  }
  return lp;
}

struct Assembled {
  conic::Program prog;
  std::vector<AffineMatrix> sigma, mu, P, U, Y, v;
  std::optional<AffineMatrix> tau, gamma, t, P0;
};

inline AffineMatrix diag_scalar(const AffineMatrix& s, int n) {
  std::vector<std::vector<AffineMatrix>> g(n, std::vector<AffineMatrix>(n, AffineMatrix::scalar(0.0)));
  for (int i = 0; i < n; ++i) g[i][i] = s;
  return AffineMatrix::blocks(g);
}

inline Assembled assemble(const LinearSystem& sys, const PlanningScene& scene, const Spec& sp, const LinPoints& lp,
                          const ProgramOptions& opt) {
  const int n = sys.n(), m = sys.m(), N = scene.horizon;
  Assembled a;
  auto& prog = a.prog;
  const MatrixXd& A = sys.A;
  const MatrixXd& B = sys.B;
  const MatrixXd At = A.transpose();
  const MatrixXd DDt = sys.D * sys.D.transpose();
  const MatrixXd In = MatrixXd::Identity(n, n);

  for (int k = 0; k < N; ++k) {
    a.U.push_back(prog.add_matrix("U" + std::to_string(k), m, n));
    a.Y.push_back(prog.add_symmetric("Y" + std::to_string(k), m));
    a.v.push_back(prog.add_vector("v" + std::to_string(k), m));
  }

  if (sp.init_cov == InitCov::Fixed) {
    a.sigma.push_back(AffineMatrix::constant(symmetrize(sp.sigma0)));
  } else {
    a.sigma.push_back(prog.add_symmetric("Sigma0", n));
    a.t = prog.add_scalar("t");
    prog.add_psd(a.sigma[0] - diag_scalar(*a.t, n), "sigma0_floor");
  }
  a.mu.push_back(AffineMatrix::constant(sp.mu0));
  if (sp.mean_set == MeanSet::Fixed) {
    a.P.push_back(AffineMatrix::constant(symmetrize(sp.p0)));
  } else if (sp.mean_set == MeanSet::Free) {
    a.P0 = prog.add_symmetric("P0", n);
    a.P.push_back(*a.P0);
  }

  for (int k = 0; k < N; ++k) {
    AffineMatrix T = B * a.U[k] * At;
    a.sigma.push_back(A * a.sigma[k] * At + T + T.transpose() + B * a.Y[k] * B.transpose() + DDt);
    a.mu.push_back(A * a.mu[k] + B * a.v[k]);
    if (sp.mean_set != MeanSet::Point) a.P.push_back(A * a.P[k] * At);
    conic::add_psd_via_schur(prog, a.sigma[k], a.U[k], a.Y[k], "schur" + std::to_string(k));
  }

  // terminal covariance cap
  const double s_goal = lambda_min(sp.goal.covariance);
  prog.add_psd(AffineMatrix::constant(s_goal * In) - a.sigma[N], "terminal_cov");

  // chance constraints, tangent-linearized
  for (int k = 0; k < N; ++k) {
    for (std::size_t j = 0; j < scene.control_constraints.size(); ++j) {
      const auto& c = scene.control_constraints[j];
      if (c.epsilon <= 0.0) throw std::invalid_argument("programs: epsilon = 0 cannot be linearized");
      double q = chance_quantile(c);
      double yr = std::sqrt(lp.y[k][j]);
      AffineMatrix lhs = a.Y[k].quad(c.alpha) * (q / (2.0 * yr)) + MatrixXd(c.alpha.transpose()) * a.v[k];
      prog.add_less_equal(lhs, AffineMatrix::scalar(c.beta - q * yr / 2.0), "u" + std::to_string(k) + "_" + std::to_string(j));
    }
    for (std::size_t j = 0; j < scene.state_constraints.size(); ++j) {
      const auto& c = scene.state_constraints[j];
      if (c.epsilon <= 0.0) throw std::invalid_argument("programs: epsilon = 0 cannot be linearized");
      double q = chance_quantile(c);
      double sr = std::sqrt(lp.sig[k][j]);
      AffineMatrix lhs = a.sigma[k].quad(c.alpha) * (q / (2.0 * sr)) + MatrixXd(c.alpha.transpose()) * a.mu[k];
      double rhs = c.beta - q * sr / 2.0;
      if (sp.mean_set != MeanSet::Point) {
        double pr = std::sqrt(lp.pr[k][j]);
        lhs += a.P[k].quad(c.alpha) * (1.0 / (2.0 * pr));
        rhs -= pr / 2.0;
      }
      prog.add_less_equal(lhs, AffineMatrix::scalar(rhs), "x" + std::to_string(k) + "_" + std::to_string(j));
    }
  }

  // terminal mean condition, written in coordinates whitened by the goal shape
  const VectorXd& muG = sp.goal.mean_set.center;
  const MatrixXd& PG = sp.goal.mean_set.shape;
  switch (sp.terminal) {
    case Terminal::Equality:
      prog.add_equality(a.mu[N] - AffineMatrix::constant(muG), "terminal_mean");
      break;
    case Terminal::Membership: {
      MatrixXd Linv = Eigen::LLT<MatrixXd>(symmetrize(PG)).matrixL().solve(In);
      AffineMatrix d = Linv * (a.mu[N] - AffineMatrix::constant(muG));
      prog.add_psd(AffineMatrix::blocks({{AffineMatrix::scalar(1.0), d.transpose()},
                                         {d, AffineMatrix::constant(In)}}), "terminal_mean");
      break;
    }
    case Terminal::Containment: {
      a.tau = prog.add_scalar("tau");
      a.gamma = prog.add_scalar("gamma");
      prog.add_nonnegative(*a.tau - AffineMatrix::scalar(1e-9), "tau_lo");
      prog.add_nonnegative(AffineMatrix::scalar(1.0 - 1e-6) - *a.tau, "tau_hi");
      prog.add_nonnegative(*a.gamma - AffineMatrix::scalar(1e-9), "gamma_lo");
      // congruence with diag(L, 1), P_G = L L^T, keeps the LMI well scaled
      MatrixXd L = Eigen::LLT<MatrixXd>(symmetrize(PG)).matrixL();
      MatrixXd Linv = L.triangularView<Eigen::Lower>().solve(In);
      MatrixXd PGinv = spd_inverse(PG);
      const AffineMatrix& muN = a.mu[N];
      // top-left (tau-1) I; off-diagonal -L^{-1}(tau muG - muN); corner M3
      AffineMatrix tl = diag_scalar(*a.tau - AffineMatrix::scalar(1.0), n);
      AffineMatrix od;
      {
        VectorXd lg = Linv * muG;
        std::vector<std::vector<AffineMatrix>> col(n, std::vector<AffineMatrix>(1));
        for (int i = 0; i < n; ++i) col[i][0] = (*a.tau) * lg(i);
        od = Linv * muN - AffineMatrix::blocks(col);
      }
      double g = muG.dot(PGinv * muG);
      AffineMatrix M3 = (*a.tau + AffineMatrix::scalar(1.0)) * g - MatrixXd(2.0 * (PGinv * muG).transpose()) * muN -
                        (*a.tau - *a.gamma);
      AffineMatrix lmi = AffineMatrix::blocks({{tl, od}, {od.transpose(), M3}});
      prog.add_psd(-lmi, "containment");
      prog.add_psd(diag_scalar(*a.gamma, n) - Linv * a.P[N] * Linv.transpose(), "shape_cap");
      break;
    }
  }

  // objective
  switch (sp.objective) {
    case Objective::Cost: {
      MatrixXd Q = opt.Q.value_or(MatrixXd::Zero(n, n));
      MatrixXd R = opt.R.value_or(MatrixXd::Identity(m, m));
      require_dims(Q.rows() == n && Q.cols() == n && R.rows() == m && R.cols() == m, "ProgramOptions: Q/R shape");
      MatrixXd Rh = spd_sqrt(R), Qh = spd_sqrt(Q);
      const bool use_q = Q.cwiseAbs().maxCoeff() > 0.0;
      AffineMatrix J = AffineMatrix::scalar(0.0);
      for (int k = 0; k < N; ++k) {
        AffineMatrix tk = prog.add_scalar("cost" + std::to_string(k));
        AffineMatrix stacked = Rh * a.v[k];
        if (use_q) stacked = AffineMatrix::vstack({stacked, Qh * a.mu[k]});
        int r = stacked.rows();
        prog.add_psd(AffineMatrix::blocks({{AffineMatrix::constant(MatrixXd::Identity(r, r)), stacked},
                                           {stacked.transpose(), tk}}), "epigraph" + std::to_string(k));
        J += tk + (R * a.Y[k]).trace();
        if (use_q) J += (Q * a.sigma[k]).trace();
      }
      prog.minimize(J);
      break;
    }
    case Objective::LogdetP0:
      prog.add_logdet(*a.P0);
      prog.maximize(AffineMatrix::scalar(0.0));
      break;
    case Objective::MaxLambdaMin:
      prog.maximize(*a.t);
      break;
  }
  return a;
}

}  // namespace detail
}  // namespace drbrt::programs
