#pragma once

#include "drbrt/conic/affine.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace drbrt::conic {

enum class Status { Optimal, Infeasible, Unbounded, Inaccurate, SolverError };
enum class Sense { Minimize, Maximize };
enum class ConstraintKind { Equality, Nonnegative, Psd };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::Inaccurate: return "inaccurate";
    case Status::SolverError: return "solver_error";
  }
  return "unknown";
}

struct ConstraintHandle {
  int index = -1;
};

struct Constraint {
  ConstraintKind kind;
  AffineMatrix expr;
  std::string name;
};

struct VariableInfo {
  std::string name;
  int rows = 1, cols = 1;
  bool symmetric = false;
  int first = 0;  // first scalar index
  int count = 0;  // number of scalars
};

struct LogdetTerm {
  AffineMatrix expr;
  double weight = 1.0;
};

struct SolveResult {
  Status status = Status::SolverError;
  VectorXd x;  // scalar variable values (present iff Optimal or Inaccurate)
  double objective = 0.0;
  double solve_time_s = 0.0;
  int iterations = 0;
  std::string message;

  bool has_values() const { return status == Status::Optimal || status == Status::Inaccurate; }

  MatrixXd value(const AffineMatrix& e) const {
    if (!has_values()) throw std::logic_error("SolveResult::value: no values for status " + std::string(to_string(status)));
    return e.value(x);
  }
  double scalar(const AffineMatrix& e) const { return value(e)(0, 0); }
};

/// A conic program over scalar variables: linear equalities, entrywise
/// nonnegativity, PSD constraints, and a linear objective with optional
/// logdet terms (added with the sign that keeps the problem convex).
class Program {
 public:
  AffineMatrix add_scalar(const std::string& name) { return add_matrix(name, 1, 1); }
  AffineMatrix add_vector(const std::string& name, int n) { return add_matrix(name, n, 1); }

  AffineMatrix add_matrix(const std::string& name, int rows, int cols) {
    require_dims(rows > 0 && cols > 0, "Program::add_matrix: empty shape");
    VariableInfo info{name, rows, cols, false, num_scalars_, rows * cols};
    std::vector<int> vars;
    MatrixXd coef = MatrixXd::Zero(rows * cols, rows * cols);
    for (int j = 0; j < rows * cols; ++j) {
      vars.push_back(num_scalars_ + j);
      coef(j, j) = 1.0;
    }
    num_scalars_ += rows * cols;
    variables_.push_back(info);
    return AffineMatrix::from_parts(MatrixXd::Zero(rows, cols), vars, coef);
  }

  /// Symmetric n x n matrix with n(n+1)/2 scalar unknowns.
  AffineMatrix add_symmetric(const std::string& name, int n) {
    require_dims(n > 0, "Program::add_symmetric: empty shape");
    int count = n * (n + 1) / 2;
    VariableInfo info{name, n, n, true, num_scalars_, count};
    std::vector<int> vars;
    MatrixXd coef = MatrixXd::Zero(n * n, count);
    int k = 0;
    for (int c = 0; c < n; ++c) {
      for (int r = c; r < n; ++r, ++k) {
        vars.push_back(num_scalars_ + k);
        coef(r + c * n, k) = 1.0;
        coef(c + r * n, k) = 1.0;
      }
    }
    num_scalars_ += count;
    variables_.push_back(info);
    return AffineMatrix::from_parts(MatrixXd::Zero(n, n), vars, coef);
  }

  ConstraintHandle add_equality(const AffineMatrix& expr, const std::string& name = "") {
    return push({ConstraintKind::Equality, expr, name});
  }
  ConstraintHandle add_equality(const AffineMatrix& lhs, const AffineMatrix& rhs, const std::string& name = "") {
    return add_equality(lhs - rhs, name);
  }

  /// Every entry of expr >= 0.
  ConstraintHandle add_nonnegative(const AffineMatrix& expr, const std::string& name = "") {
    return push({ConstraintKind::Nonnegative, expr, name});
  }
  /// lhs <= rhs entrywise.
  ConstraintHandle add_less_equal(const AffineMatrix& lhs, const AffineMatrix& rhs, const std::string& name = "") {
    return add_nonnegative(rhs - lhs, name);
  }

  /// expr is PSD. The expression must be square and symmetric by construction.
  ConstraintHandle add_psd(const AffineMatrix& expr, const std::string& name = "") {
    require_dims(expr.rows() == expr.cols(), "Program::add_psd: matrix must be square");
    double scale = std::max(1.0, expr.offset().cwiseAbs().maxCoeff());
    if (expr.asymmetry() > 1e-9 * scale) throw std::invalid_argument("Program::add_psd: expression is not symmetric: " + name);
    return push({ConstraintKind::Psd, expr.symmetrized(), name});
  }

  void minimize(const AffineMatrix& linear) { set_objective(Sense::Minimize, linear); }
  void maximize(const AffineMatrix& linear) { set_objective(Sense::Maximize, linear); }

  void set_objective(Sense sense, const AffineMatrix& linear) {
    require_dims(linear.rows() == 1 && linear.cols() == 1, "Program: objective must be scalar");
    check_vars(linear);
    sense_ = sense;
    objective_ = linear;
  }

  /// Adds weight*logdet(X) to a maximization (or -weight*logdet(X) to a minimization).
  void add_logdet(const AffineMatrix& expr, double weight = 1.0) {
    require_dims(expr.rows() == expr.cols(), "Program::add_logdet: matrix must be square");
    if (!(weight > 0.0)) throw std::invalid_argument("Program::add_logdet: weight must be positive");
    check_vars(expr);
    logdets_.push_back({expr.symmetrized(), weight});
  }

  int num_scalars() const { return num_scalars_; }
  const std::vector<VariableInfo>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Constraint& constraint(ConstraintHandle h) const { return constraints_.at(h.index); }
  const std::vector<LogdetTerm>& logdets() const { return logdets_; }
  Sense sense() const { return sense_; }
  const AffineMatrix& objective() const { return objective_; }

  /// Objective value in the user's sense, including logdet terms.
  double objective_value(const VectorXd& x) const {
    double f = objective_.scalar_value(x);
    double sgn = sense_ == Sense::Maximize ? 1.0 : -1.0;
    for (const auto& t : logdets_) {
      Eigen::LLT<MatrixXd> llt(symmetrize(t.expr.value(x)));
      if (llt.info() != Eigen::Success) return sgn * -std::numeric_limits<double>::infinity();
      double ld = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      f += sgn * t.weight * ld;
    }
    return f;
  }

  /// Nonnegative violation measure of a constraint at x.
  double residual(ConstraintHandle h, const VectorXd& x) const {
    const auto& c = constraint(h);
    MatrixXd v = c.expr.value(x);
    switch (c.kind) {
      case ConstraintKind::Equality: return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
      case ConstraintKind::Nonnegative: return v.size() ? std::max(0.0, -v.minCoeff()) : 0.0;
      case ConstraintKind::Psd: return std::max(0.0, -lambda_min(v));
    }
    return 0.0;
  }
  double residual(ConstraintHandle h, const SolveResult& r) const {
    if (!r.has_values()) throw std::logic_error("Program::residual: result carries no values");
    return residual(h, r.x);
  }

 private:
  void check_vars(const AffineMatrix& e) const {
    for (int v : e.vars())
      if (v < 0 || v >= num_scalars_) throw std::invalid_argument("Program: expression references an undeclared variable");
  }
  ConstraintHandle push(Constraint c) {
    check_vars(c.expr);
    constraints_.push_back(std::move(c));
    return {static_cast<int>(constraints_.size()) - 1};
  }

  int num_scalars_ = 0;
  std::vector<VariableInfo> variables_;
  std::vector<Constraint> constraints_;
  std::vector<LogdetTerm> logdets_;
  Sense sense_ = Sense::Minimize;
  AffineMatrix objective_ = AffineMatrix::scalar(0.0);
};

/// Registers [[Sigma, U^T], [U, Y]] >= 0.
inline ConstraintHandle add_psd_via_schur(Program& prog, const AffineMatrix& sigma, const AffineMatrix& u,
                                          const AffineMatrix& y, const std::string& name = "schur") {
  require_dims(sigma.rows() == sigma.cols(), "add_psd_via_schur: Sigma must be square");
  require_dims(u.cols() == sigma.rows(), "add_psd_via_schur: U must be m x n");
  require_dims(y.rows() == y.cols() && y.rows() == u.rows(), "add_psd_via_schur: Y must be m x m");
  return prog.add_psd(AffineMatrix::blocks({{sigma, u.transpose()}, {u, y}}), name);
}

}  // namespace drbrt::conic
