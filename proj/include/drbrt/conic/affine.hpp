#pragma once

#include "drbrt/core/linalg.hpp"

#include <algorithm>
#include <initializer_list>
#include <iterator>
#include <limits>
#include <vector>

namespace drbrt::conic {

/// Matrix-valued affine function of scalar decision variables:
/// X(x) = offset + sum_j x[vars[j]] * C_j, with vec(C_j) stored as column j of `coef`.
class AffineMatrix {
 public:
  AffineMatrix() : AffineMatrix(0, 0) {}
  AffineMatrix(int rows, int cols) : rows_(rows), cols_(cols), offset_(MatrixXd::Zero(rows, cols)), coef_(rows * cols, 0) {}

  static AffineMatrix constant(const MatrixXd& m) {
    AffineMatrix a(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    a.offset_ = m;
    return a;
  }
  static AffineMatrix scalar(double s) { return constant(MatrixXd::Constant(1, 1, s)); }

  /// Single variable placed at entry (r, c) (and (c, r) when `symmetric`).
  static AffineMatrix variable_entry(int rows, int cols, int var, int r, int c, bool symmetric = false) {
    AffineMatrix a(rows, cols);
    a.vars_ = {var};
    a.coef_ = MatrixXd::Zero(rows * cols, 1);
    a.coef_(r + c * rows, 0) = 1.0;
    if (symmetric) a.coef_(c + r * rows, 0) = 1.0;
    return a;
  }

  /// Build directly from a coefficient table (vars need not be sorted).
  static AffineMatrix from_parts(const MatrixXd& offset, const std::vector<int>& vars, const MatrixXd& coef) {
    AffineMatrix a(static_cast<int>(offset.rows()), static_cast<int>(offset.cols()));
    a.offset_ = offset;
    std::vector<int> order(vars.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) { return vars[x] < vars[y]; });
    for (int idx : order) {
      if (!a.vars_.empty() && a.vars_.back() == vars[idx]) {
        a.coef_.col(a.coef_.cols() - 1) += coef.col(idx);
        continue;
      }
      a.vars_.push_back(vars[idx]);
      a.coef_.conservativeResize(a.rows_ * a.cols_, a.vars_.size());
      a.coef_.col(a.coef_.cols() - 1) = coef.col(idx);
    }
    return a;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const MatrixXd& offset() const { return offset_; }
  const std::vector<int>& vars() const { return vars_; }
  const MatrixXd& coef() const { return coef_; }
  bool is_constant() const { return vars_.empty(); }

  /// Coefficient matrix of the j-th referenced variable.
  MatrixXd coefficient(std::size_t j) const { return Eigen::Map<const MatrixXd>(coef_.col(j).data(), rows_, cols_); }

  MatrixXd value(const VectorXd& x) const {
    MatrixXd out = offset_;
    if (!vars_.empty()) {
      VectorXd xs(vars_.size());
      for (std::size_t j = 0; j < vars_.size(); ++j) xs(j) = x(vars_[j]);
      VectorXd flat = coef_ * xs;
      out += Eigen::Map<const MatrixXd>(flat.data(), rows_, cols_);
    }
    return out;
  }

  double scalar_value(const VectorXd& x) const { return value(x)(0, 0); }

  AffineMatrix operator+(const AffineMatrix& o) const { return combine(o, 1.0); }
  AffineMatrix operator-(const AffineMatrix& o) const { return combine(o, -1.0); }
  AffineMatrix operator-() const { return (*this) * -1.0; }
  AffineMatrix operator+(const MatrixXd& m) const { return *this + constant(m); }
  AffineMatrix operator-(const MatrixXd& m) const { return *this - constant(m); }
  AffineMatrix& operator+=(const AffineMatrix& o) { return *this = *this + o; }
  AffineMatrix& operator-=(const AffineMatrix& o) { return *this = *this - o; }

  AffineMatrix operator*(double s) const {
    AffineMatrix a = *this;
    a.offset_ *= s;
    a.coef_ *= s;
    return a;
  }
  friend AffineMatrix operator*(double s, const AffineMatrix& a) { return a * s; }

  /// L * X
  friend AffineMatrix operator*(const MatrixXd& L, const AffineMatrix& X) {
    require_dims(L.cols() == X.rows_, "AffineMatrix: left factor has wrong column count");
    AffineMatrix a(static_cast<int>(L.rows()), X.cols_);
    a.offset_ = L * X.offset_;
    a.vars_ = X.vars_;
    if (!X.vars_.empty()) {
      const int nv = static_cast<int>(X.vars_.size());
      Eigen::Map<const MatrixXd> stacked(X.coef_.data(), X.rows_, X.cols_ * nv);
      MatrixXd prod = L * stacked;
      a.coef_ = Eigen::Map<const MatrixXd>(prod.data(), L.rows() * X.cols_, nv);
    }
    return a;
  }

  /// X * R
  friend AffineMatrix operator*(const AffineMatrix& X, const MatrixXd& R) {
    require_dims(R.rows() == X.cols_, "AffineMatrix: right factor has wrong row count");
    return (R.transpose() * X.transpose()).transpose();
  }

  AffineMatrix transpose() const {
    AffineMatrix a(cols_, rows_);
    a.offset_ = offset_.transpose();
    a.vars_ = vars_;
    a.coef_.resize(rows_ * cols_, vars_.size());
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      Eigen::Map<const MatrixXd> c(coef_.col(j).data(), rows_, cols_);
      Eigen::Map<MatrixXd>(a.coef_.col(j).data(), cols_, rows_) = c.transpose();
    }
    return a;
  }

  AffineMatrix block(int r0, int c0, int nr, int nc) const {
    require_dims(r0 >= 0 && c0 >= 0 && r0 + nr <= rows_ && c0 + nc <= cols_, "AffineMatrix::block out of range");
    AffineMatrix a(nr, nc);
    a.offset_ = offset_.block(r0, c0, nr, nc);
    std::vector<int> keep;
    MatrixXd cols(nr * nc, vars_.size());
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      Eigen::Map<const MatrixXd> c(coef_.col(j).data(), rows_, cols_);
      Eigen::Map<MatrixXd>(cols.col(j).data(), nr, nc) = c.block(r0, c0, nr, nc);
    }
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      if (cols.col(j).cwiseAbs().maxCoeff() != 0.0) keep.push_back(static_cast<int>(j));
    }
    a.coef_.resize(nr * nc, keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      a.vars_.push_back(vars_[keep[i]]);
      a.coef_.col(i) = cols.col(keep[i]);
    }
    return a;
  }

  AffineMatrix entry(int r, int c) const { return block(r, c, 1, 1); }

  AffineMatrix trace() const {
    require_dims(rows_ == cols_, "AffineMatrix::trace needs a square matrix");
    AffineMatrix a(1, 1);
    a.offset_(0, 0) = offset_.trace();
    a.vars_ = vars_;
    a.coef_.resize(1, vars_.size());
    for (std::size_t j = 0; j < vars_.size(); ++j) a.coef_(0, j) = coefficient(j).trace();
    return a;
  }

  /// alpha^T X beta (1 x 1)
  AffineMatrix bilinear(const VectorXd& alpha, const VectorXd& beta) const {
    return (MatrixXd(alpha.transpose()) * (*this)) * MatrixXd(beta);
  }
  AffineMatrix quad(const VectorXd& alpha) const { return bilinear(alpha, alpha); }

  /// Block assembly from a grid of equally sized rows/columns.
  static AffineMatrix blocks(std::initializer_list<std::initializer_list<AffineMatrix>> grid) {
    std::vector<std::vector<AffineMatrix>> g;
    for (const auto& row : grid) g.emplace_back(row);
    return blocks(g);
  }

  static AffineMatrix blocks(const std::vector<std::vector<AffineMatrix>>& g) {
    require_dims(!g.empty() && !g[0].empty(), "AffineMatrix::blocks: empty grid");
    std::vector<int> rh, cw;
    for (const auto& row : g) rh.push_back(row[0].rows());
    for (const auto& b : g[0]) cw.push_back(b.cols());
    int R = 0, C = 0;
    for (int h : rh) R += h;
    for (int w : cw) C += w;
    std::vector<int> all;
    for (const auto& row : g) {
      require_dims(row.size() == cw.size(), "AffineMatrix::blocks: ragged grid");
      for (const auto& b : row) all.insert(all.end(), b.vars_.begin(), b.vars_.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    AffineMatrix a(R, C);
    a.vars_ = all;
    a.coef_ = MatrixXd::Zero(R * C, all.size());
    int r0 = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      int c0 = 0;
      for (std::size_t j = 0; j < g[i].size(); ++j) {
        const auto& b = g[i][j];
        require_dims(b.rows() == rh[i] && b.cols() == cw[j], "AffineMatrix::blocks: block size mismatch");
        a.offset_.block(r0, c0, b.rows(), b.cols()) = b.offset_;
        for (std::size_t v = 0; v < b.vars_.size(); ++v) {
          auto pos = std::lower_bound(all.begin(), all.end(), b.vars_[v]) - all.begin();
          Eigen::Map<MatrixXd> dst(a.coef_.col(pos).data(), R, C);
          dst.block(r0, c0, b.rows(), b.cols()) += b.coefficient(v);
        }
        c0 += b.cols();
      }
      r0 += rh[i];
    }
    return a;
  }

  static AffineMatrix hstack(const std::vector<AffineMatrix>& parts) { return blocks(std::vector<std::vector<AffineMatrix>>{parts}); }

  static AffineMatrix vstack(const std::vector<AffineMatrix>& parts) {
    std::vector<std::vector<AffineMatrix>> g;
    for (const auto& p : parts) g.push_back({p});
    return blocks(g);
  }

  /// Largest entrywise asymmetry across offset and coefficients.
  double asymmetry() const {
    if (rows_ != cols_) return std::numeric_limits<double>::infinity();
    double a = drbrt::asymmetry(offset_);
    for (std::size_t j = 0; j < vars_.size(); ++j) a = std::max(a, drbrt::asymmetry(coefficient(j)));
    return a;
  }

  AffineMatrix symmetrized() const { return (*this + transpose()) * 0.5; }

 private:
  AffineMatrix combine(const AffineMatrix& o, double sign) const {
    require_dims(rows_ == o.rows_ && cols_ == o.cols_, "AffineMatrix: size mismatch in sum");
    AffineMatrix a(rows_, cols_);
    a.offset_ = offset_ + sign * o.offset_;
    std::vector<int> merged;
    std::set_union(vars_.begin(), vars_.end(), o.vars_.begin(), o.vars_.end(), std::back_inserter(merged));
    a.vars_ = merged;
    a.coef_ = MatrixXd::Zero(rows_ * cols_, merged.size());
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
      if (i < vars_.size() && vars_[i] == merged[k]) a.coef_.col(k) += coef_.col(i++);
      if (j < o.vars_.size() && o.vars_[j] == merged[k]) a.coef_.col(k) += sign * o.coef_.col(j++);
    }
    return a;
  }

  int rows_, cols_;
  MatrixXd offset_;
  std::vector<int> vars_;
  MatrixXd coef_;
};

}  // namespace drbrt::conic
