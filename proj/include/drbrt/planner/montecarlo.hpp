#pragma once

#include "drbrt/planner/plan.hpp"

#include <functional>
#include <ostream>
#include <random>

namespace drbrt::planner {

struct McReport {
  int samples = 0;
  std::vector<std::vector<double>> control_violation_rate;  // [k][constraint]
  std::vector<std::vector<double>> state_violation_rate;    // [k][constraint]
  std::vector<VectorXd> step_means;                          // empirical mean of x_k, k = 0..T
  double terminal_goal_frequency = 0.0;                      // fraction with x_T inside the goal mean set
  VectorXd terminal_mean;
  MatrixXd terminal_covariance;

  double worst_control_rate() const {
    double w = 0.0;
    for (const auto& r : control_violation_rate)
      for (double x : r) w = std::max(w, x);
    return w;
  }
};

/// Receives every simulated state; u is null at the terminal step.
using TrajectorySink = std::function<void(int sample, int step, const VectorXd& x, const VectorXd* u)>;

/// Independent generator for one sample, derived from (seed, index) only.
inline std::mt19937_64 sample_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

/// Closed-loop rollouts of u_k = K_k (x_k - mu_hat_k) + v_k with mu_hat propagated from the query mean.
inline McReport monte_carlo(const LinearSystem& sys, const PlanningScene& scene, const GaussianBelief& query,
                            const ControlLaw& law, const AmbiguitySet& goal, int samples, std::uint64_t seed,
                            const TrajectorySink& sink = nullptr) {
  if (samples < 1) throw std::invalid_argument("monte_carlo: samples must be >= 1");
  law.validate(sys);
  const int n = sys.n(), T = law.length();
  const auto mu_hat = propagate_mean(sys, query.mean, law);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(query.covariance));
  const MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const std::size_t nx = scene.state_constraints.size(), nu = scene.control_constraints.size();

  McReport rep;
  rep.samples = samples;
  std::vector<std::vector<long>> cviol(T, std::vector<long>(nu, 0)), sviol(T, std::vector<long>(nx, 0));
  std::vector<VectorXd> sums(T + 1, VectorXd::Zero(n));
  MatrixXd terminal(n, samples);
  long inside = 0;
  std::normal_distribution<double> g;
  VectorXd z(n), w(sys.D.cols());
  for (int s = 0; s < samples; ++s) {
    auto rng = sample_stream(seed, static_cast<std::uint64_t>(s));
    for (int i = 0; i < n; ++i) z(i) = g(rng);
    VectorXd x = query.mean + root * z;
    for (int k = 0; k < T; ++k) {
      const auto& st = law.steps[k];
      VectorXd u = st.K * (x - mu_hat[k]) + st.v;
      for (std::size_t j = 0; j < nx; ++j)
        if (scene.state_constraints[j].alpha.dot(x) > scene.state_constraints[j].beta) ++sviol[k][j];
      for (std::size_t j = 0; j < nu; ++j)
        if (scene.control_constraints[j].alpha.dot(u) > scene.control_constraints[j].beta) ++cviol[k][j];
      sums[k] += x;
      if (sink) sink(s, k, x, &u);
      for (int i = 0; i < w.size(); ++i) w(i) = g(rng);
      x = sys.A * x + sys.B * u + sys.D * w;
    }
    sums[T] += x;
    if (sink) sink(s, T, x, nullptr);
    terminal.col(s) = x;
    inside += goal.mean_set.contains(x);
  }
  for (int k = 0; k < T; ++k) {
    std::vector<double> c(nu), st(nx);
    for (std::size_t j = 0; j < nu; ++j) c[j] = static_cast<double>(cviol[k][j]) / samples;
    for (std::size_t j = 0; j < nx; ++j) st[j] = static_cast<double>(sviol[k][j]) / samples;
    rep.control_violation_rate.push_back(std::move(c));
    rep.state_violation_rate.push_back(std::move(st));
  }
  for (auto& m : sums) rep.step_means.push_back(m / samples);
  rep.terminal_goal_frequency = static_cast<double>(inside) / samples;
  rep.terminal_mean = rep.step_means.back();
  MatrixXd c = terminal.colwise() - rep.terminal_mean;
  rep.terminal_covariance = samples > 1 ? MatrixXd(c * c.transpose() / (samples - 1)) : MatrixXd::Zero(n, n);
  return rep;
}

inline McReport monte_carlo(const LinearSystem& sys, const PlanningScene& scene, const Plan& plan, const AmbiguitySet& goal,
                            int samples, std::uint64_t seed, const TrajectorySink& sink = nullptr) {
  return monte_carlo(sys, scene, plan.query, plan.law, goal, samples, seed, sink);
}

/// CSV writer with header sample,step,x_0..x_{n-1},u_0..u_{m-1}; the terminal row leaves u empty.
class TrajectoryCsv {
 public:
  TrajectoryCsv(std::ostream& out, int n, int m) : out_(out), m_(m) {
    out_ << "sample,step";
    for (int i = 0; i < n; ++i) out_ << ",x_" << i;
    for (int i = 0; i < m; ++i) out_ << ",u_" << i;
    out_ << "\n";
    out_.precision(17);
  }

  TrajectorySink sink() {
    return [this](int s, int k, const VectorXd& x, const VectorXd* u) {
      out_ << s << "," << k;
      for (int i = 0; i < x.size(); ++i) out_ << "," << x(i);
      for (int i = 0; i < m_; ++i) {
        out_ << ",";
        if (u) out_ << (*u)(i);
      }
      out_ << "\n";
    };
  }

 private:
  std::ostream& out_;
  int m_;
};

}  // namespace drbrt::planner
