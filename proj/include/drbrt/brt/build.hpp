#pragma once

#include "drbrt/brt/sampling.hpp"
#include "drbrt/core/log.hpp"
#include "drbrt/programs/programs.hpp"

#include <chrono>

namespace drbrt::brt {

struct BuildConfig {
  LinearSystem system;
  PlanningScene scene;
  AmbiguitySet goal;
  Variant variant = Variant::MaxEllipsoid;
  int iterations = 15;
  std::uint64_t seed = 1;
  VectorXd r_sample;  // half-widths of the candidate-mean box
  MatrixXd sigma_q;   // candidate covariance for maxellipsoid expansion
  Selection selection = Selection::Voronoi;
  Workspace workspace;
  bool bilevel = false;  // refine maxellipsoid nodes with MAXCOVARELL
  programs::LinearizationRefs refs;
  programs::ProgramOptions options;

  void validate() const {
    system.validate();
    scene.validate(system);
    goal.validate();
    require_dims(goal.dim() == system.n(), "BuildConfig: goal dimension must be n");
    require_dims(r_sample.size() == system.n(), "BuildConfig: r_sample must have length n");
    if ((r_sample.array() <= 0.0).any()) throw std::invalid_argument("BuildConfig: r_sample must be positive");
    require_dims(sigma_q.rows() == system.n() && sigma_q.cols() == system.n(), "BuildConfig: sigma_q must be n x n");
    if (lambda_min(sigma_q) <= 0.0) throw std::invalid_argument("BuildConfig: sigma_q must be PD");
    if (iterations < 0) throw std::invalid_argument("BuildConfig: iterations must be >= 0");
    for (int d : workspace.dims)
      if (d < 0 || d >= system.n()) throw std::invalid_argument("BuildConfig: workspace dims out of range");
    for (int i = 0; i < 2; ++i)
      if (!(workspace.lo[i] < workspace.hi[i])) throw std::invalid_argument("BuildConfig: empty workspace");
    refs.validate(system.n(), system.m());
  }
};

/// Re-validates the edge from a candidate payload into `parent`.
inline FeasibilityReport validate_edge(const Tree& tree, const LinearSystem& sys, const PlanningScene& scene,
                                       const AmbiguitySet& source, const ControlLaw& law, int parent, double tol = 1e-6) {
  AmbiguitySet target = node_target(tree, parent);
  if (point_semantics(tree.metadata().variant))
    return validate_trajectory(sys, scene, source.center_belief(), law, target, tol);
  return validate_ambiguity_trajectory(sys, scene, source, law, target, tol);
}

namespace detail {

inline bool reject(Tree& tree, const std::string& reason) {
  ++tree.metadata().rejections[reason];
  log::debug("expansion rejected: " + reason);
  return false;
}

inline bool accept(Tree& tree, const BuildConfig& cfg, int parent, const VectorXd& center, const MatrixXd& shape,
                   const MatrixXd& cov, const ControlLaw& law) {
  AmbiguitySet source(Ellipsoid(center, shape), cov);
  auto rep = validate_edge(tree, cfg.system, cfg.scene, source, law, parent, cfg.options.validation_tol);
  if (!rep.passed) return reject(tree, "certificate");
  tree.add_node(parent, center, shape, cov, law);
  ++tree.metadata().accepted;
  return true;
}

}  // namespace detail

/// One MAXELLIPSOID expansion; returns true when a node was appended.
inline bool expand_maxellipsoid(Tree& tree, const BuildConfig& cfg, Rng& rng) {
  ++tree.metadata().attempted;
  int parent = select_node(tree, rng, cfg.selection, cfg.workspace);
  VectorXd mu = sample_mean_around(tree.node(parent), cfg.r_sample, rng);
  AmbiguitySet target = node_target(tree, parent);
  try {
    auto r = programs::solve_maxellipsoid(cfg.system, cfg.scene, mu, cfg.sigma_q, target, cfg.refs, cfg.options);
    if (!r.ok()) return detail::reject(tree, programs::to_string(r.outcome));
    MatrixXd P = r.get().planned_shapes.front();
    MatrixXd S = cfg.sigma_q;
    ControlLaw law = r.get().law;
    if (cfg.bilevel) {
      auto mc = programs::solve_maxcovarell(cfg.system, cfg.scene, Ellipsoid(mu, P), target, cfg.refs, cfg.options);
      if (mc.ok() && lambda_min(mc.get().planned_covariances.front()) >= lambda_min(cfg.sigma_q)) {
        S = mc.get().planned_covariances.front();
        law = mc.get().law;
      }
    }
    return detail::accept(tree, cfg, parent, mu, P, S, law);
  } catch (const std::exception& e) {
    log::warn(std::string("maxellipsoid expansion failed: ") + e.what());
    return detail::reject(tree, "error");
  }
}

/// One MAXCOVAR expansion with a point mean set.
inline bool expand_maxcovar(Tree& tree, const BuildConfig& cfg, Rng& rng) {
  ++tree.metadata().attempted;
  int parent = select_node(tree, rng, cfg.selection, cfg.workspace);
  VectorXd mu = sample_mean_around(tree.node(parent), cfg.r_sample, rng);
  try {
    auto r = programs::solve_maxcovar(cfg.system, cfg.scene, mu, node_target(tree, parent).center_belief(), cfg.refs,
                                      cfg.options);
    if (!r.ok()) return detail::reject(tree, programs::to_string(r.outcome));
    return detail::accept(tree, cfg, parent, mu, Ellipsoid::point(mu).shape, r.get().planned_covariances.front(),
                          r.get().law);
  } catch (const std::exception& e) {
    log::warn(std::string("maxcovar expansion failed: ") + e.what());
    return detail::reject(tree, "error");
  }
}

/// One RANDCOVAR expansion: random covariance capped by the MAXCOVAR eigenvalue, then OPTSTEER.
inline bool expand_randcovar(Tree& tree, const BuildConfig& cfg, Rng& rng) {
  ++tree.metadata().attempted;
  int parent = select_node(tree, rng, cfg.selection, cfg.workspace);
  VectorXd mu = sample_mean_around(tree.node(parent), cfg.r_sample, rng);
  AmbiguitySet target = node_target(tree, parent);
  try {
    auto cap = programs::solve_maxcovar(cfg.system, cfg.scene, mu, target.center_belief(), cfg.refs, cfg.options);
    if (!cap.ok()) return detail::reject(tree, std::string("cap_") + programs::to_string(cap.outcome));
    MatrixXd S = sample_spd_matrix(cfg.system.n(), lambda_min(cap.get().planned_covariances.front()), rng);
    auto r = programs::solve_optsteer(cfg.system, cfg.scene, GaussianBelief(mu, S), target, cfg.refs, cfg.options);
    if (!r.ok()) return detail::reject(tree, programs::to_string(r.outcome));
    return detail::accept(tree, cfg, parent, mu, Ellipsoid::point(mu).shape, S, r.get().law);
  } catch (const std::exception& e) {
    log::warn(std::string("randcovar expansion failed: ") + e.what());
    return detail::reject(tree, "error");
  }
}

/// Runs cfg.iterations expansions of the configured variant from a fresh root.
inline Tree build_tree(const BuildConfig& cfg) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  Tree tree = Tree::create_root(cfg.goal);
  auto& meta = tree.metadata();
  meta.seed = cfg.seed;
  meta.variant = cfg.variant;
  meta.iterations = cfg.iterations;
  Rng rng(cfg.seed);
  for (int it = 0; it < cfg.iterations; ++it) {
    switch (cfg.variant) {
      case Variant::MaxEllipsoid: expand_maxellipsoid(tree, cfg, rng); break;
      case Variant::MaxCovar: expand_maxcovar(tree, cfg, rng); break;
      case Variant::RandCovar: expand_randcovar(tree, cfg, rng); break;
    }
    log::info("iteration " + std::to_string(it + 1) + "/" + std::to_string(cfg.iterations) + ": " +
              std::to_string(tree.size()) + " nodes");
  }
  meta.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tree;
}

struct EdgeCheck {
  int child = 0;
  int parent = 0;
  FeasibilityReport report;
};

struct TreeCheck {
  std::vector<EdgeCheck> edges;
  bool passed = true;
  double worst_state_margin = -std::numeric_limits<double>::infinity();
  double worst_control_margin = -std::numeric_limits<double>::infinity();
  std::vector<int> failed_children;
};

/// Re-validates every edge certificate of a tree.
inline TreeCheck validate_tree(const Tree& tree, const LinearSystem& sys, const PlanningScene& scene, double tol = 1e-6) {
  tree.check();
  TreeCheck out;
  for (auto [child, parent] : tree.edges()) {
    EdgeCheck e{child, parent, validate_edge(tree, sys, scene, node_source(tree, child), tree.edge(child, parent), parent, tol)};
    out.worst_state_margin = std::max(out.worst_state_margin, e.report.worst_state_margin);
    out.worst_control_margin = std::max(out.worst_control_margin, e.report.worst_control_margin);
    if (!e.report.passed) {
      out.passed = false;
      out.failed_children.push_back(child);
    }
    out.edges.push_back(std::move(e));
  }
  return out;
}

}  // namespace drbrt::brt
