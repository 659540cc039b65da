#pragma once

#include "drbrt/brt/archive.hpp"
#include "drbrt/programs/programs.hpp"

#include <algorithm>
#include <optional>

namespace drbrt::planner {

/// a followed by b; the empty law is the identity on either side.
inline ControlLaw concatenate(const ControlLaw& a, const ControlLaw& b) {
  if (!a.empty() && !b.empty())
    require_dims(a.steps.front().K.rows() == b.steps.front().K.rows() && a.steps.front().K.cols() == b.steps.front().K.cols(),
                 "concatenate: laws act on different dimensions");
  ControlLaw out = a;
  out.steps.insert(out.steps.end(), b.steps.begin(), b.steps.end());
  return out;
}

struct Plan {
  GaussianBelief query;
  std::vector<int> node_path;         // connection node first, root last
  std::vector<ControlLaw> segments;   // query hop, then one per tree edge
  ControlLaw law;                     // concatenation of segments
  VectorXd predicted_mean;
  MatrixXd predicted_covariance;
};

struct Attempt {
  int node = 0;
  double distance = 0.0;
  programs::Outcome outcome = programs::Outcome::SolverError;
  double solve_time_s = 0.0;
};

struct PathResult {
  std::optional<Plan> plan;
  std::vector<Attempt> attempts;
  bool found() const { return plan.has_value(); }
};

/// Node ids sorted by full-state distance to x, ties by id; at most M.
inline std::vector<std::pair<int, double>> nearest_nodes(const brt::Tree& tree, const VectorXd& x, int M) {
  std::vector<std::pair<int, double>> d;
  for (const auto& nd : tree.nodes()) d.emplace_back(nd.id, (nd.center - x).norm());
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  if (static_cast<int>(d.size()) > M) d.resize(M);
  return d;
}

inline Plan assemble_plan(const LinearSystem& sys, const brt::Tree& tree, const GaussianBelief& query, int node,
                          const ControlLaw& hop) {
  Plan p;
  p.query = query;
  p.node_path = tree.path_to_root(node);
  p.segments.push_back(hop);
  for (std::size_t i = 0; i + 1 < p.node_path.size(); ++i) p.segments.push_back(tree.edge(p.node_path[i], p.node_path[i + 1]));
  for (const auto& s : p.segments) p.law = concatenate(p.law, s);
  p.predicted_mean = propagate_mean(sys, query.mean, p.law).back();
  p.predicted_covariance = propagate_covariance(sys, query.covariance, p.law).back();
  return p;
}

/// Tries one-hop OPTSTEER connections to the M nearest nodes; the first success wins.
inline PathResult find_path(const brt::Tree& tree, const GaussianBelief& query, int M, const LinearSystem& sys,
                            const PlanningScene& scene, const programs::LinearizationRefs& refs,
                            const programs::ProgramOptions& opt = {}) {
  if (M < 1) throw std::invalid_argument("find_path: M must be >= 1");
  require_dims(query.dim() == sys.n(), "find_path: query dimension must be n");
  PathResult out;
  for (auto [id, dist] : nearest_nodes(tree, query.mean, M)) {
    auto r = programs::solve_optsteer(sys, scene, query, brt::node_target(tree, id), refs, opt);
    out.attempts.push_back({id, dist, r.outcome, r.solve_time_s});
    if (r.ok()) {
      out.plan = assemble_plan(sys, tree, query, id, r.get().law);
      return out;
    }
  }
  return out;
}

/// Full-horizon check of a plan against the root goal.
inline FeasibilityReport validate_plan(const LinearSystem& sys, const PlanningScene& scene, const Plan& plan,
                                       const AmbiguitySet& goal, double tol = 1e-6) {
  return validate_trajectory(sys, scene, plan.query, plan.law, goal, tol);
}

/// FEASIBLE(q, target, hN) as one program over the stretched horizon.
inline bool hbrs_member(const GaussianBelief& q, const AmbiguitySet& target, int h, const LinearSystem& sys,
                        const PlanningScene& scene, const programs::LinearizationRefs& refs,
                        const programs::ProgramOptions& opt = {}) {
  if (h < 1) throw std::invalid_argument("hbrs_member: h must be >= 1");
  return programs::solve_optsteer(sys, scene.with_horizon(h * scene.horizon), q, target, refs, opt).ok();
}

inline bool hbrs_member(const GaussianBelief& q, const GaussianBelief& target, int h, const LinearSystem& sys,
                        const PlanningScene& scene, const programs::LinearizationRefs& refs,
                        const programs::ProgramOptions& opt = {}) {
  return hbrs_member(q, AmbiguitySet::from_belief(target), h, sys, scene, refs, opt);
}

/// Union over nodes of the (h - depth)-BRS of each node's target set.
inline bool hbrs_tree_member(const GaussianBelief& q, const brt::Tree& tree, int h, const LinearSystem& sys,
                             const PlanningScene& scene, const programs::LinearizationRefs& refs,
                             const programs::ProgramOptions& opt = {}) {
  if (h < 1) throw std::invalid_argument("hbrs_tree_member: h must be >= 1");
  for (const auto& nd : tree.nodes())
    if (nd.depth < h && hbrs_member(q, brt::node_target(tree, nd.id), h - nd.depth, sys, scene, refs, opt)) return true;
  return false;
}

}  // namespace drbrt::planner
