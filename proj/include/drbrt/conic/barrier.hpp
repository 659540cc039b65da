#pragma once

#include "drbrt/conic/program.hpp"
#include "drbrt/core/log.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace drbrt::conic {

struct SolverSettings {
  double feasibility_tol = 1e-8;  // Phase I acceptance margin
  double gap_tol = 1e-8;          // relative duality-gap target
  double growth = 20.0;           // barrier parameter multiplier
  int max_newton = 800;           // total Newton steps over both phases
  double unbounded_level = 1e12;  // |objective| or |x| beyond which the problem is called unbounded
  double phase1_box = 1e7;        // |z_i| bound used only while searching for a feasible point
  double divergence_level = 1e8;  // Phase II iterates beyond this mark an unbounded problem
};

namespace detail {

/// F(z) = f0 + sum_a z[vars[a]] * mat(coef.col(a)), constrained PD. Objective blocks
/// enter the objective as -weight*logdet instead of the barrier.
struct Block {
  int size = 0;
  MatrixXd f0;
  std::vector<int> vars;
  MatrixXd coef;
  bool objective = false;
  double weight = 1.0;
};

/// x = x0 + S z with S stored row-wise as sparse (column, weight) pairs.
struct Substitution {
  VectorXd x0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  int reduced = 0;

  VectorXd expand(const VectorXd& z) const {
    VectorXd x = x0;
    for (std::size_t j = 0; j < rows.size(); ++j)
      for (const auto& [k, w] : rows[j]) x(j) += w * z(k);
    return x;
  }
};

inline int svec_size(int s) { return s * (s + 1) / 2; }

inline void svec(const MatrixXd& m, double* out) {
  const int s = static_cast<int>(m.rows());
  int k = 0;
  for (int c = 0; c < s; ++c) {
    out[k++] = m(c, c);
    for (int r = c + 1; r < s; ++r) out[k++] = std::numbers::sqrt2 * 0.5 * (m(r, c) + m(c, r));
  }
}

inline MatrixXd smat(const double* v, int s) {
  MatrixXd m(s, s);
  int k = 0;
  for (int c = 0; c < s; ++c) {
    m(c, c) = v[k++];
    for (int r = c + 1; r < s; ++r) m(r, c) = m(c, r) = v[k++] / std::numbers::sqrt2;
  }
  return m;
}

class BarrierSolver {
 public:
  BarrierSolver(std::vector<Block> blocks, VectorXd c, int p, const SolverSettings& st)
      : blocks_(std::move(blocks)), c_(std::move(c)), p_(p), st_(st) {
    for (const auto& b : blocks_)
      if (!b.objective) m_barrier_ += b.size;
  }

  enum class Outcome { Converged, Infeasible, Unbounded, IterationLimit, Numerical };

  int newton_steps = 0;

  MatrixXd eval(const Block& b, const VectorXd& z) const {
    MatrixXd f = b.f0;
    if (!b.vars.empty()) {
      VectorXd zs(b.vars.size());
      for (std::size_t a = 0; a < b.vars.size(); ++a) zs(a) = z(b.vars[a]);
      VectorXd flat = b.coef * zs;
      f += Eigen::Map<const MatrixXd>(flat.data(), b.size, b.size);
    }
    return symmetrize(f);
  }

  double min_eig(const VectorXd& z) const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) lo = std::min(lo, lambda_min(eval(b, z)));
    return lo;
  }

  bool strictly_feasible(const VectorXd& z) const {
    for (const auto& b : blocks_) {
      Eigen::LLT<MatrixXd> llt(eval(b, z));
      if (llt.info() != Eigen::Success) return false;
    }
    return true;
  }

  /// f(z) = c^T z - sum_obj w logdet F(z)
  double objective(const VectorXd& z) const {
    double f = c_.dot(z);
    for (const auto& b : blocks_) {
      if (!b.objective) continue;
      Eigen::LLT<MatrixXd> llt(eval(b, z));
      f -= b.weight * 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    }
    return f;
  }

  /// Path following from strictly feasible z. `stop` is checked after every Newton step;
  /// `certify` after every centering and may declare infeasibility.
  template <class Stop, class Certify>
  Outcome run(VectorXd& z, double t, double gap_target, Stop stop, Certify certify) {
    while (true) {
      Outcome o = center(z, t, stop);
      if (o != Outcome::Converged) return o;
      if (stop(z)) return Outcome::Converged;
      if (certify(z, t)) return Outcome::Infeasible;
      double f = objective(z);
      if (log::threshold().load() == log::Level::Debug) {
        std::ostringstream os;
        os << "barrier: t=" << t << " f=" << f << " newton=" << newton_steps << " |z|=" << z.cwiseAbs().maxCoeff();
        log::debug(os.str());
      }
      if (m_barrier_ == 0 || m_barrier_ / t <= gap_target * std::max(1.0, std::abs(f))) return Outcome::Converged;
      if (std::abs(f) > st_.unbounded_level) return Outcome::Unbounded;
      t *= st_.growth;
    }
  }

  int barrier_degree() const { return m_barrier_; }

 private:
  struct BlockState {
    MatrixXd W;  // svec(L^{-1} F_a L^{-T}) per column
  };

  template <class Stop>
  Outcome center(VectorXd& z, double t, Stop stop) {
    std::vector<BlockState> states(blocks_.size());
    double best_decrement = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int iter = 0; iter < 200; ++iter) {
      if (newton_steps >= st_.max_newton) return Outcome::IterationLimit;
      if (z.cwiseAbs().maxCoeff() > st_.divergence_level) return Outcome::Unbounded;
      ++newton_steps;
      VectorXd g = t * c_;
      MatrixXd H = MatrixXd::Zero(p_, p_);
      for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        double scale = b.objective ? t * b.weight : 1.0;
        MatrixXd F = eval(b, z);
        Eigen::LLT<MatrixXd> llt(F);
        if (llt.info() != Eigen::Success) return Outcome::Numerical;
        const int s = b.size;
        const int nv = static_cast<int>(b.vars.size());
        MatrixXd& W = states[i].W;
        W.resize(svec_size(s), nv);
        if (nv == 0) continue;
        if (s == 1) {
          double f = F(0, 0);
          W = b.coef / f;
        } else {
          MatrixXd L = llt.matrixL();
          MatrixXd X = b.coef;  // s*s x nv, each column an s x s matrix
          Eigen::Map<MatrixXd> Xs(X.data(), s, s * nv);
          L.triangularView<Eigen::Lower>().solveInPlace(Xs);
          MatrixXd Y(s, s * nv);
          for (int a = 0; a < nv; ++a) Y.block(0, a * s, s, s) = Xs.block(0, a * s, s, s).transpose();
          L.triangularView<Eigen::Lower>().solveInPlace(Y);
          for (int a = 0; a < nv; ++a) svec(Y.block(0, a * s, s, s), W.col(a).data());
        }
        // gradient: -scale * tr(F_a tilde); Hessian: scale * <F_a tilde, F_b tilde>
        VectorXd tr = VectorXd::Zero(nv);
        {
          int k = 0;
          for (int c = 0; c < s; ++c) {
            tr += W.row(k).transpose();
            k += s - c;
          }
        }
        MatrixXd G = MatrixXd::Zero(nv, nv);
        G.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose(), scale);
        for (int a = 0; a < nv; ++a) {
          int ia = b.vars[a];
          g(ia) -= scale * tr(a);
          for (int bb = 0; bb <= a; ++bb) H(ia, b.vars[bb]) += G(a, bb);
        }
      }
      // H was filled in the lower triangle relative to the block ordering; vars are sorted so
      // ia >= ib whenever a >= bb, which keeps everything in the lower triangle of H.
      // Jacobi scaling makes the Cholesky robust to wildly different variable scales
      MatrixXd Hs = H.selfadjointView<Eigen::Lower>();
      VectorXd dscale = Hs.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
      Hs = dscale.asDiagonal() * Hs * dscale.asDiagonal();
      VectorXd gs = dscale.cwiseProduct(g);
      VectorXd dz;
      double reg = 1e-14;
      for (int attempt = 0; attempt < 8; ++attempt) {
        MatrixXd Hr = Hs;
        Hr.diagonal().array() += reg;
        Eigen::LLT<MatrixXd> hl(Hr);
        if (hl.info() == Eigen::Success) {
          dz = -dscale.cwiseProduct(hl.solve(gs));
          if (dz.allFinite()) break;
        }
        dz.resize(0);
        reg *= 100.0;
      }
      if (dz.size() == 0) return Outcome::Numerical;
      double decrement = -g.dot(dz);
      if (!(decrement >= 0.0)) decrement = 0.0;
      if (decrement <= 2e-8) return Outcome::Converged;
      // roundoff floor at large t: a small decrement that no longer shrinks is as good as it gets
      if (iter >= 25 && decrement <= 1e-4) return Outcome::Converged;
      // a decrement that keeps bouncing without a new low is gradient roundoff, not progress
      if (decrement < best_decrement) {
        best_decrement = decrement;
        since_best = 0;
      } else if (++since_best >= 10 && iter >= 25) {
        return Outcome::Converged;
      }

      // exact line search on the closed form of the centering objective along dz
      std::vector<VectorXd> eigs(blocks_.size());
      double amax = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& b = blocks_[i];
        const int nv = static_cast<int>(b.vars.size());
        if (nv == 0) {
          eigs[i].resize(0);
          continue;
        }
        VectorXd d(nv);
        for (int a = 0; a < nv; ++a) d(a) = dz(b.vars[a]);
        VectorXd sv = states[i].W * d;
        if (b.size == 1) {
          eigs[i] = sv;
        } else {
          Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(sv.data(), b.size), Eigen::EigenvaluesOnly);
          eigs[i] = es.eigenvalues();
        }
        for (int k = 0; k < eigs[i].size(); ++k)
          if (eigs[i](k) < 0.0) amax = std::min(amax, -1.0 / eigs[i](k));
      }
      const double slope0 = t * c_.dot(dz);
      auto dpsi = [&](double a) {
        double d = slope0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
          double w = blocks_[i].objective ? t * blocks_[i].weight : 1.0;
          for (int k = 0; k < eigs[i].size(); ++k) d -= w * eigs[i](k) / (1.0 + a * eigs[i](k));
        }
        return d;
      };
      double lo = 0.0, hi;
      if (std::isfinite(amax)) {
        hi = amax;
      } else {
        hi = 1.0;
        while (dpsi(hi) < 0.0) {
          lo = hi;
          hi *= 4.0;
          if (hi > st_.unbounded_level) {
            // feasible descent ray: move far along it, then let the caller decide
            VectorXd far = z + lo * dz;
            if (strictly_feasible(far)) z = far;
            return stop(z) ? Outcome::Converged : Outcome::Unbounded;
          }
        }
      }
      for (int k = 0; k < 100 && hi - lo > 1e-14 * hi; ++k) {
        double mid = 0.5 * (lo + hi);
        if (dpsi(mid) < 0.0) lo = mid; else hi = mid;
      }
      double alpha = lo > 0.0 ? lo : 0.5 * hi;
      VectorXd zn = z + alpha * dz;
      int shrink = 0;
      while (!strictly_feasible(zn) && shrink < 60) {
        alpha *= 0.5;
        zn = z + alpha * dz;
        ++shrink;
      }
      if (shrink == 60) return Outcome::Numerical;
      z = zn;
      if (stop(z)) return Outcome::Converged;
      if (decrement <= 1e-7 && alpha * dz.cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, z.cwiseAbs().maxCoeff()))
        return Outcome::Converged;
    }
    return Outcome::Converged;
  }

  std::vector<Block> blocks_;
  VectorXd c_;
  int p_;
  SolverSettings st_;
  int m_barrier_ = 0;
};

inline Block make_block(const AffineMatrix& e, bool objective, double weight) {
  Block b;
  b.size = e.rows();
  b.f0 = e.offset();
  b.vars = e.vars();
  b.coef = e.coef();
  b.objective = objective;
  b.weight = weight;
  return b;
}

/// Rewrites a block in reduced coordinates.
inline Block substitute(const Block& b, const Substitution& sub) {
  Block out;
  out.size = b.size;
  out.objective = b.objective;
  out.weight = b.weight;
  out.f0 = b.f0;
  MatrixXd dense = MatrixXd::Zero(b.size * b.size, sub.reduced);
  std::vector<char> used(sub.reduced, 0);
  for (std::size_t a = 0; a < b.vars.size(); ++a) {
    int j = b.vars[a];
    Eigen::Map<const MatrixXd> ca(b.coef.col(a).data(), b.size, b.size);
    if (sub.x0(j) != 0.0) out.f0 += sub.x0(j) * ca;
    for (const auto& [k, w] : sub.rows[j]) {
      dense.col(k) += w * b.coef.col(a);
      used[k] = 1;
    }
  }
  for (int k = 0; k < sub.reduced; ++k) {
    if (used[k] && dense.col(k).cwiseAbs().maxCoeff() > 0.0) out.vars.push_back(k);
  }
  out.coef.resize(b.size * b.size, out.vars.size());
  for (std::size_t a = 0; a < out.vars.size(); ++a) out.coef.col(a) = dense.col(out.vars[a]);
  return out;
}

/// Eliminates linear equalities. Returns false when they are inconsistent.
inline bool eliminate(const Program& prog, Substitution& sub) {
  const int n = prog.num_scalars();
  std::vector<std::pair<VectorXd, double>> rows;  // a^T x = beta
  for (const auto& c : prog.constraints()) {
    if (c.kind != ConstraintKind::Equality) continue;
    const auto& e = c.expr;
    for (int r = 0; r < e.rows() * e.cols(); ++r) {
      VectorXd a = VectorXd::Zero(n);
      for (std::size_t j = 0; j < e.vars().size(); ++j) a(e.vars()[j]) = e.coef()(r, j);
      double off = e.offset().data()[r];
      if (a.cwiseAbs().maxCoeff() == 0.0) {
        if (std::abs(off) > 1e-9 * std::max(1.0, std::abs(off))) return false;
        continue;
      }
      rows.push_back({a, -off});
    }
  }
  sub.x0 = VectorXd::Zero(n);
  sub.rows.assign(n, {});
  if (rows.empty()) {
    sub.reduced = n;
    for (int j = 0; j < n; ++j) sub.rows[j].push_back({j, 1.0});
    return true;
  }
  const int q = static_cast<int>(rows.size());
  MatrixXd A(q, n);
  VectorXd beta(q);
  for (int i = 0; i < q; ++i) {
    A.row(i) = rows[i].first.transpose();
    beta(i) = rows[i].second;
  }
  Eigen::FullPivLU<MatrixXd> lu(A);
  lu.setThreshold(1e-11);
  const int r = static_cast<int>(lu.rank());
  std::vector<int> basic, free;
  std::vector<char> is_basic(n, 0);
  for (int i = 0; i < r; ++i) {
    int j = lu.permutationQ().indices()(i);
    basic.push_back(j);
    is_basic[j] = 1;
  }
  for (int j = 0; j < n; ++j)
    if (!is_basic[j]) free.push_back(j);
  MatrixXd AB(q, r), AN(q, free.size());
  for (int i = 0; i < r; ++i) AB.col(i) = A.col(basic[i]);
  for (std::size_t i = 0; i < free.size(); ++i) AN.col(i) = A.col(free[i]);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(AB);
  VectorXd t0 = qr.solve(beta);
  double scale = std::max(1.0, beta.cwiseAbs().maxCoeff());
  if ((AB * t0 - beta).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
  MatrixXd T = qr.solve(AN);
  sub.reduced = static_cast<int>(free.size());
  for (std::size_t i = 0; i < free.size(); ++i) sub.rows[free[i]].push_back({static_cast<int>(i), 1.0});
  for (int i = 0; i < r; ++i) {
    sub.x0(basic[i]) = t0(i);
    for (int k = 0; k < T.cols(); ++k)
      if (std::abs(T(i, k)) > 1e-15) sub.rows[basic[i]].push_back({k, -T(i, k)});
  }
  return true;
}

}  // namespace detail

/// Solves a Program with a primal log-barrier path-following method
/// (determinant maximization form). Deterministic for fixed inputs.
inline SolveResult solve(const Program& prog, const SolverSettings& st = {}) {
  using Clock = std::chrono::steady_clock;
  auto t_start = Clock::now();
  SolveResult res;
  auto finish = [&](Status s, const std::string& msg) {
    res.status = s;
    res.message = msg;
    if (!res.has_values()) res.x.resize(0);
    res.solve_time_s = std::chrono::duration<double>(Clock::now() - t_start).count();
    return res;
  };

  detail::Substitution sub;
  if (!detail::eliminate(prog, sub)) return finish(Status::Infeasible, "inconsistent equality constraints");
  const int p = sub.reduced;

  std::vector<detail::Block> blocks;
  for (const auto& c : prog.constraints()) {
    if (c.kind == ConstraintKind::Equality) continue;
    if (c.kind == ConstraintKind::Psd) {
      blocks.push_back(detail::substitute(detail::make_block(c.expr, false, 1.0), sub));
    } else {
      for (int r = 0; r < c.expr.rows(); ++r)
        for (int cc = 0; cc < c.expr.cols(); ++cc)
          blocks.push_back(detail::substitute(detail::make_block(c.expr.block(r, cc, 1, 1), false, 1.0), sub));
    }
  }
  for (const auto& t : prog.logdets()) blocks.push_back(detail::substitute(detail::make_block(t.expr, true, t.weight), sub));

  // minimized linear objective in reduced coordinates
  const double sgn = prog.sense() == Sense::Maximize ? -1.0 : 1.0;
  VectorXd c = VectorXd::Zero(p);
  {
    const auto& o = prog.objective();
    for (std::size_t j = 0; j < o.vars().size(); ++j)
      for (const auto& [k, w] : sub.rows[o.vars()[j]]) c(k) += sgn * w * o.coef()(0, j);
  }

  // constant blocks are checked once and dropped
  std::vector<detail::Block> active;
  for (auto& b : blocks) {
    if (b.vars.empty()) {
      Eigen::LLT<MatrixXd> llt(symmetrize(b.f0));
      if (llt.info() != Eigen::Success) return finish(Status::Infeasible, "constant constraint violated");
      if (!b.objective) continue;
    }
    active.push_back(std::move(b));
  }
  blocks = std::move(active);

  auto done = [&](const VectorXd& z, Status s, int steps, const std::string& msg) {
    res.x = sub.expand(z);
    res.objective = prog.objective_value(res.x);
    res.iterations = steps;
    return finish(s, msg);
  };

  if (p == 0) return done(VectorXd::Zero(0), Status::Optimal, 0, "no free variables");

  // ---- Phase I: minimize s subject to F_i(z) + s I > 0 ----
  VectorXd z = VectorXd::Zero(p);
  int steps = 0;
  {
    detail::BarrierSolver probe(blocks, c, p, st);
    double lo = probe.min_eig(z);
    if (!(lo > 0.0) || !probe.strictly_feasible(z)) {
      std::vector<detail::Block> aug = blocks;
      for (auto& b : aug) {
        b.objective = false;
        b.weight = 1.0;
        b.vars.push_back(p);
        b.coef.conservativeResize(Eigen::NoChange, b.coef.cols() + 1);
        MatrixXd eye = MatrixXd::Identity(b.size, b.size);
        b.coef.col(b.coef.cols() - 1) = Eigen::Map<const VectorXd>(eye.data(), b.size * b.size);
      }
      VectorXd c1 = VectorXd::Zero(p + 1);
      c1(p) = 1.0;
      double s0 = std::max(0.0, -lo);
      double s_init = s0 + std::max(1.0, 0.1 * s0);
      {
        // s >= -s_init keeps the auxiliary problem bounded
        detail::Block floor;
        floor.size = 1;
        floor.f0 = MatrixXd::Constant(1, 1, s_init);
        floor.vars = {p};
        floor.coef = MatrixXd::Ones(1, 1);
        aug.push_back(floor);
      }
      // a wide box on z keeps the centering problems bounded when the feasible set is not
      for (int j = 0; j < p; ++j) {
        for (double sign : {1.0, -1.0}) {
          detail::Block box;
          box.size = 1;
          box.f0 = MatrixXd::Constant(1, 1, st.phase1_box);
          box.vars = {j};
          box.coef = MatrixXd::Constant(1, 1, sign);
          aug.push_back(box);
        }
      }
      detail::BarrierSolver phase1(aug, c1, p + 1, st);
      VectorXd y(p + 1);
      y.head(p) = z;
      y(p) = s_init;
      const double m1 = phase1.barrier_degree();
      auto stop = [&](const VectorXd& v) { return v(p) < 0.0; };
      auto certify = [&](const VectorXd& v, double t) {
        return v(p) - m1 / t > 0.0 || (m1 / t < st.feasibility_tol && v(p) > -st.feasibility_tol);
      };
      auto out = phase1.run(y, 1.0, 0.0, stop, certify);
      steps += phase1.newton_steps;
      res.iterations = steps;
      if (out == detail::BarrierSolver::Outcome::Infeasible) return finish(Status::Infeasible, "phase I certificate");
      if (out == detail::BarrierSolver::Outcome::Converged && y(p) >= 0.0)
        return finish(Status::Infeasible, "no strictly feasible point");
      if (out == detail::BarrierSolver::Outcome::IterationLimit)
        return finish(Status::SolverError, "phase I iteration limit");
      if (out == detail::BarrierSolver::Outcome::Numerical && !(y(p) < 0.0))
        return finish(Status::SolverError, "phase I numerical failure");
      if (out == detail::BarrierSolver::Outcome::Unbounded && !(y(p) < 0.0))
        return finish(Status::SolverError, "phase I diverged");
      z = y.head(p);
      if (log::threshold().load() == log::Level::Debug) {
        std::ostringstream os;
        Eigen::Index arg;
        double zm = z.cwiseAbs().maxCoeff(&arg);
        os << "phase I done: s=" << y(p) << " newton=" << phase1.newton_steps << " |z|=" << zm << " at " << arg;
        log::debug(os.str());
      }
      if (!probe.strictly_feasible(z)) return finish(Status::SolverError, "phase I point not strictly feasible");
    }
  }

  // ---- Phase II ----
  detail::BarrierSolver phase2(blocks, c, p, st);
  phase2.newton_steps = steps;
  auto never = [](const VectorXd&) { return false; };
  auto no_cert = [](const VectorXd&, double) { return false; };
  auto out = phase2.run(z, 1.0, st.gap_tol, never, no_cert);
  steps = phase2.newton_steps;
  res.iterations = steps;
  switch (out) {
    case detail::BarrierSolver::Outcome::Converged: return done(z, Status::Optimal, steps, "converged");
    case detail::BarrierSolver::Outcome::Unbounded: return finish(Status::Unbounded, "objective unbounded");
    case detail::BarrierSolver::Outcome::IterationLimit: return done(z, Status::Inaccurate, steps, "iteration limit");
    case detail::BarrierSolver::Outcome::Numerical: return done(z, Status::Inaccurate, steps, "numerical stall");
    default: break;
  }
  return finish(Status::SolverError, "unexpected solver state");
}

}  // namespace drbrt::conic
