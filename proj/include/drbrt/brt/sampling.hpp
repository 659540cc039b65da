#pragma once

#include "drbrt/brt/tree.hpp"

#include <array>
#include <random>

namespace drbrt::brt {

using Rng = std::mt19937_64;

/// Workspace box for Voronoi-biased selection over two position coordinates.
struct Workspace {
  std::array<double, 2> lo{-40.0, -40.0};
  std::array<double, 2> hi{40.0, 40.0};
  std::array<int, 2> dims{0, 1};
};

inline int select_node(const Tree& tree, Rng& rng, Selection strategy, const Workspace& ws = {}) {
  if (tree.size() == 1) return 0;
  if (strategy == Selection::Uniform) return std::uniform_int_distribution<int>(0, tree.size() - 1)(rng);
  std::array<double, 2> p;
  for (int i = 0; i < 2; ++i) p[i] = std::uniform_real_distribution<double>(ws.lo[i], ws.hi[i])(rng);
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& nd : tree.nodes()) {
    double d = 0.0;
    for (int i = 0; i < 2; ++i) d += std::pow(nd.center(ws.dims[i]) - p[i], 2);
    if (d < best_d) {
      best_d = d;
      best = nd.id;
    }
  }
  return best;
}

/// Uniform in the box center +- half_widths.
inline VectorXd sample_mean_around(const TreeNode& node, const VectorXd& half_widths, Rng& rng) {
  require_dims(half_widths.size() == node.center.size(), "sample_mean_around: half-width length must be n");
  if ((half_widths.array() <= 0.0).any()) throw std::invalid_argument("sample_mean_around: half-widths must be positive");
  VectorXd x(node.center.size());
  for (int i = 0; i < x.size(); ++i)
    x(i) = node.center(i) + std::uniform_real_distribution<double>(-half_widths(i), half_widths(i))(rng);
  return x;
}

/// Q diag(lambda) Q^T with Haar-random Q and lambda_i uniform on (0.1 cap, cap].
inline MatrixXd sample_spd_matrix(int n, double cap, Rng& rng) {
  if (!(cap > 0.0)) throw std::invalid_argument("sample_spd_matrix: cap must be positive");
  std::normal_distribution<double> g;
  MatrixXd G(n, n);
  for (int i = 0; i < G.size(); ++i) G.data()[i] = g(rng);
  Eigen::HouseholderQR<MatrixXd> qr(G);
  MatrixXd Q = qr.householderQ();
  MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd lam(n);
  for (int i = 0; i < n; ++i) lam(i) = cap - 0.9 * cap * u(rng);
  return symmetrize(Q * lam.asDiagonal() * Q.transpose());
}

}  // namespace drbrt::brt
