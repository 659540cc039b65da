#include "drbrt/conic/barrier.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace drbrt;
using namespace drbrt::conic;

namespace {

MatrixXd diag2(double a, double b) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

MatrixXd random_spd(int n, std::mt19937_64& rng, double floor = 0.1) {
  std::normal_distribution<double> g;
  MatrixXd a(n, n);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose() + floor * MatrixXd::Identity(n, n);
}

}  // namespace

TEST(Affine, ArithmeticMatchesDenseEvaluation) {
  Program p;
  auto X = p.add_matrix("X", 2, 3);
  auto S = p.add_symmetric("S", 3);
  MatrixXd L = MatrixXd::Random(4, 2), R = MatrixXd::Random(3, 3);
  MatrixXd M = MatrixXd::Random(3, 3);
  auto expr = L * X * R + (L * X * M) * 2.0 - L * X + L * X * S.trace().value(VectorXd::Zero(p.num_scalars()))(0, 0);
  VectorXd x = VectorXd::Random(p.num_scalars());
  MatrixXd xv = X.value(x), sv = S.value(x);
  EXPECT_NEAR(asymmetry(sv), 0.0, 0.0);
  MatrixXd ref = L * xv * R + 2.0 * L * xv * M - L * xv;
  EXPECT_LT((expr.value(x) - ref).norm(), 1e-12);
  EXPECT_LT((expr.transpose().value(x) - ref.transpose()).norm(), 1e-12);
  EXPECT_LT((expr.block(1, 1, 2, 2).value(x) - ref.block(1, 1, 2, 2)).norm(), 1e-12);
  EXPECT_NEAR(S.trace().scalar_value(x), sv.trace(), 1e-12);
  VectorXd a = VectorXd::Random(3);
  EXPECT_NEAR(S.quad(a).scalar_value(x), a.dot(sv * a), 1e-12);
  auto big = AffineMatrix::blocks({{S, X.transpose()}, {X, AffineMatrix::constant(MatrixXd::Identity(2, 2))}});
  MatrixXd bv = big.value(x);
  EXPECT_LT((bv.topLeftCorner(3, 3) - sv).norm(), 1e-14);
  EXPECT_LT((bv.bottomLeftCorner(2, 3) - xv).norm(), 1e-14);
}

TEST(Solve, MinTraceAboveIdentity) {
  Program p;
  auto X = p.add_symmetric("X", 2);
  p.add_psd(X - MatrixXd::Identity(2, 2));
  p.minimize(X.trace());
  auto r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal) << r.message;
  EXPECT_NEAR(r.objective, 2.0, 1e-6);
  EXPECT_LT((r.value(X) - MatrixXd::Identity(2, 2)).norm(), 1e-6);
}

TEST(Solve, LambdaMinOfDiagonal) {
  Program p;
  auto t = p.add_scalar("t");
  p.add_psd(AffineMatrix::constant(diag2(1, 4)) - MatrixXd::Identity(2, 2) * 0.0 - AffineMatrix::blocks({{t, AffineMatrix::scalar(0)}, {AffineMatrix::scalar(0), t}}));
  p.maximize(t);
  auto r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal) << r.message;
  EXPECT_NEAR(r.scalar(t), 1.0, 1e-7);
}

TEST(Solve, LogdetUnderDiagonalCap) {
  Program p;
  auto P = p.add_symmetric("P", 2);
  p.add_psd(AffineMatrix::constant(diag2(2, 3)) - P);
  p.add_logdet(P);
  p.maximize(AffineMatrix::scalar(0));
  auto r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal) << r.message;
  EXPECT_NEAR(r.objective, std::log(6.0), 1e-6);
  EXPECT_LT((r.value(P) - diag2(2, 3)).norm(), 1e-5);
}

TEST(Solve, LogdetMaximizerBeatsRandomFeasiblePoints) {
  std::mt19937_64 rng(3);
  for (int inst = 0; inst < 10; ++inst) {
    MatrixXd cap = random_spd(2, rng, 0.2);
    Program p;
    auto P = p.add_symmetric("P", 2);
    p.add_psd(AffineMatrix::constant(cap) - P);
    p.add_psd(AffineMatrix::constant(2.0 * cap.inverse()) * 0.0 + P);  // P >= 0
    p.add_logdet(P);
    p.maximize(AffineMatrix::scalar(0));
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::Optimal);
    double best = std::log(r.value(P).determinant());
    // the maximizer of det over {P <= cap} is cap itself
    EXPECT_NEAR(best, std::log(cap.determinant()), 1e-4 * std::abs(std::log(cap.determinant())) + 1e-6);
  }
}

TEST(Solve, InfeasibleAndUnbounded) {
  {
    Program p;
    auto x = p.add_scalar("x");
    p.add_nonnegative(x - AffineMatrix::scalar(1));
    p.add_nonnegative(AffineMatrix::scalar(0) - x);
    p.minimize(x);
    EXPECT_EQ(solve(p).status, Status::Infeasible);
  }
  {
    Program p;
    auto x = p.add_scalar("x");
    p.add_nonnegative(x);
    p.maximize(x);
    EXPECT_EQ(solve(p).status, Status::Unbounded);
  }
  {
    Program p;
    auto x = p.add_vector("x", 2);
    p.add_equality(x.entry(0, 0) + x.entry(1, 0) - AffineMatrix::scalar(1));
    p.add_equality(x.entry(0, 0) + x.entry(1, 0) - AffineMatrix::scalar(2));
    p.minimize(x.entry(0, 0));
    EXPECT_EQ(solve(p).status, Status::Infeasible);
  }
}

TEST(Solve, EqualitiesAreEliminated) {
  // minimize x^2 + y^2 (via epigraph) subject to x + 2y = 5
  Program p;
  auto v = p.add_vector("v", 2);
  auto t = p.add_scalar("t");
  p.add_equality(v.entry(0, 0) + v.entry(1, 0) * 2.0 - AffineMatrix::scalar(5));
  p.add_psd(AffineMatrix::blocks({{AffineMatrix::constant(MatrixXd::Identity(2, 2)), v}, {v.transpose(), t}}));
  p.minimize(t);
  auto r = solve(p);
  ASSERT_EQ(r.status, Status::Optimal) << r.message;
  EXPECT_NEAR(r.objective, 5.0, 1e-6);
  EXPECT_NEAR(r.value(v)(0), 1.0, 1e-5);
  EXPECT_NEAR(r.value(v)(1), 2.0, 1e-5);
}

TEST(Schur, BlockExamples) {
  std::mt19937_64 rng(11);
  Program p;
  auto S = p.add_symmetric("S", 3);
  auto U = p.add_matrix("U", 2, 3);
  auto Y = p.add_symmetric("Y", 2);
  auto h = add_psd_via_schur(p, S, U, Y);
  auto pack = [&](const MatrixXd& s, const MatrixXd& u, const MatrixXd& y) {
    VectorXd x = VectorXd::Zero(p.num_scalars());
    // scalars are laid out per add_* call in declaration order
    int k = 0;
    for (int c = 0; c < 3; ++c)
      for (int r = c; r < 3; ++r) x(k++) = s(r, c);
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 2; ++r) x(k++) = u(r, c);
    for (int c = 0; c < 2; ++c)
      for (int r = c; r < 2; ++r) x(k++) = y(r, c);
    return x;
  };
  EXPECT_EQ(p.residual(h, pack(MatrixXd::Identity(3, 3), MatrixXd::Zero(2, 3), MatrixXd::Identity(2, 2))), 0.0);
  MatrixXd K = MatrixXd::Random(2, 3);
  EXPECT_GT(p.residual(h, pack(MatrixXd::Identity(3, 3), K, K * K.transpose() - 1e-3 * MatrixXd::Identity(2, 2))), 0.0);
  for (int i = 0; i < 20; ++i) {
    MatrixXd sig = random_spd(3, rng);
    MatrixXd k2 = MatrixXd::Random(2, 3);
    MatrixXd blk = p.constraint(h).expr.value(pack(sig, k2 * sig, symmetrize(k2 * sig * k2.transpose())));
    EXPECT_GE(lambda_min(blk), -1e-8);
  }
  EXPECT_THROW(add_psd_via_schur(p, S, Y, Y), DimensionError);
}

TEST(Properties, ResidualsAndLambdaMinGadget) {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 10; ++inst) {
    MatrixXd C = random_spd(3, rng);
    Program p;
    auto X = p.add_symmetric("X", 3);
    auto t = p.add_scalar("t");
    std::vector<ConstraintHandle> hs;
    hs.push_back(p.add_psd(AffineMatrix::constant(C) - X));
    hs.push_back(p.add_psd(X - MatrixXd::Identity(3, 3) * 0.0 - AffineMatrix::constant(MatrixXd::Identity(3, 3)) * 0.05));
    hs.push_back(p.add_psd(X - AffineMatrix::constant(MatrixXd::Identity(3, 3)) * 0.0 -
                           AffineMatrix::blocks({{t, AffineMatrix::scalar(0), AffineMatrix::scalar(0)},
                                                 {AffineMatrix::scalar(0), t, AffineMatrix::scalar(0)},
                                                 {AffineMatrix::scalar(0), AffineMatrix::scalar(0), t}})));
    hs.push_back(p.add_nonnegative(AffineMatrix::scalar(10) - X.trace()));
    p.maximize(t);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::Optimal);
    for (auto h : hs) EXPECT_LE(p.residual(h, r), 1e-7);
    EXPECT_NEAR(r.scalar(t), lambda_min(r.value(X)), 1e-6);
  }
}

TEST(Properties, Deterministic) {
  Program p;
  auto P = p.add_symmetric("P", 3);
  MatrixXd cap = MatrixXd::Identity(3, 3);
  cap(0, 1) = cap(1, 0) = 0.3;
  p.add_psd(AffineMatrix::constant(cap) - P);
  p.add_logdet(P);
  p.maximize(P.trace() * 0.1);
  auto a = solve(p), b = solve(p);
  ASSERT_EQ(a.status, Status::Optimal);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.iterations, b.iterations);
}
