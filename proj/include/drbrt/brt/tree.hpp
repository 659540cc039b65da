#pragma once

#include "drbrt/core/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drbrt::brt {

enum class Variant { MaxEllipsoid, MaxCovar, RandCovar };
enum class Selection { Voronoi, Uniform };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::MaxEllipsoid: return "maxellipsoid";
    case Variant::MaxCovar: return "maxcovar";
    case Variant::RandCovar: return "randcovar";
  }
  return "unknown";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "maxellipsoid") return Variant::MaxEllipsoid;
  if (s == "maxcovar") return Variant::MaxCovar;
  if (s == "randcovar") return Variant::RandCovar;
  throw std::invalid_argument("unknown tree variant '" + s + "'");
}

inline const char* to_string(Selection s) { return s == Selection::Voronoi ? "voronoi" : "uniform"; }

inline Selection parse_selection(const std::string& s) {
  if (s == "voronoi") return Selection::Voronoi;
  if (s == "uniform") return Selection::Uniform;
  throw std::invalid_argument("unknown selection strategy '" + s + "'");
}

/// Point variants keep degenerate mean sets and steer to node centers exactly.
inline bool point_semantics(Variant v) { return v != Variant::MaxEllipsoid; }

struct TreeNode {
  int id = 0;
  VectorXd center;
  MatrixXd shape;
  MatrixXd covariance;
  std::optional<int> parent;
  std::optional<ControlLaw> law_to_parent;
  std::vector<int> children;
  int depth = 0;

  AmbiguitySet ambiguity() const { return AmbiguitySet(Ellipsoid(center, shape), covariance); }
};

struct BuildMetadata {
  std::uint64_t seed = 0;
  Variant variant = Variant::MaxEllipsoid;
  int iterations = 0;
  int attempted = 0;
  int accepted = 0;
  double wall_time_s = 0.0;
  std::map<std::string, int> rejections;
};

/// Rooted tree of ambiguity sets; node ids are dense and equal to insertion order.
class Tree {
 public:
  static Tree create_root(const AmbiguitySet& goal) {
    goal.validate();
    Tree t;
    t.goal_ = goal;
    TreeNode root;
    root.id = 0;
    root.center = goal.mean_set.center;
    root.shape = goal.mean_set.shape;
    root.covariance = goal.covariance;
    t.nodes_.push_back(std::move(root));
    return t;
  }

  /// Rebuilds a tree from stored nodes; children lists are recomputed and every invariant checked.
  static Tree from_nodes(const AmbiguitySet& goal, std::vector<TreeNode> nodes, BuildMetadata meta) {
    if (nodes.empty()) throw std::invalid_argument("tree: no nodes");
    Tree t;
    t.goal_ = goal;
    t.meta_ = std::move(meta);
    for (auto& nd : nodes) nd.children.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].id != static_cast<int>(i)) throw std::invalid_argument("tree: node ids must be 0..n-1 in order");
      if (nodes[i].parent) {
        int p = *nodes[i].parent;
        if (p < 0 || p >= static_cast<int>(i)) throw std::invalid_argument("tree: node " + std::to_string(i) + " has an invalid parent");
        nodes[p].children.push_back(static_cast<int>(i));
      }
    }
    t.nodes_ = std::move(nodes);
    t.check();
    return t;
  }

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const {
    if (id < 0 || id >= size()) throw std::out_of_range("tree: no node " + std::to_string(id));
    return nodes_[id];
  }
  const TreeNode& root() const { return nodes_.front(); }
  const AmbiguitySet& goal() const { return goal_; }
  BuildMetadata& metadata() { return meta_; }
  const BuildMetadata& metadata() const { return meta_; }

  /// Edge controller keyed by (child, parent).
  const ControlLaw& edge(int child, int parent) const {
    const TreeNode& c = node(child);
    if (!c.parent || *c.parent != parent)
      throw std::out_of_range("tree: no edge " + std::to_string(child) + "->" + std::to_string(parent));
    return *c.law_to_parent;
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& nd : nodes_)
      if (nd.parent) out.emplace_back(nd.id, *nd.parent);
    return out;
  }

  /// Node ids from `id` up to and including the root.
  std::vector<int> path_to_root(int id) const {
    std::vector<int> out{id};
    while (node(out.back()).parent) out.push_back(*node(out.back()).parent);
    return out;
  }

  int add_node(int parent, const VectorXd& center, const MatrixXd& shape, const MatrixXd& covariance, ControlLaw law) {
    const TreeNode& p = node(parent);
    TreeNode nd;
    nd.id = size();
    nd.center = center;
    nd.shape = shape;
    nd.covariance = covariance;
    nd.parent = parent;
    nd.law_to_parent = std::move(law);
    nd.depth = p.depth + 1;
    nd.ambiguity();  // validates the payload
    nodes_[parent].children.push_back(nd.id);
    nodes_.push_back(std::move(nd));
    return nodes_.back().id;
  }

  /// Throws std::logic_error when a structural invariant is broken.
  void check() const {
    const TreeNode& r = nodes_.front();
    if (r.parent || r.law_to_parent || r.depth != 0) throw std::logic_error("tree: malformed root");
    for (const auto& nd : nodes_) {
      nd.ambiguity();
      if (nd.id == 0) continue;
      if (!nd.parent || !nd.law_to_parent) throw std::logic_error("tree: non-root node without parent or law");
      const TreeNode& p = nodes_.at(*nd.parent);
      if (nd.depth != p.depth + 1) throw std::logic_error("tree: depth mismatch at node " + std::to_string(nd.id));
      int hits = 0;
      for (int c : p.children) hits += c == nd.id;
      if (hits != 1) throw std::logic_error("tree: child list mismatch at node " + std::to_string(nd.id));
    }
  }

 private:
  AmbiguitySet goal_;
  std::vector<TreeNode> nodes_;
  BuildMetadata meta_;
};

/// The ambiguity set that edges into `id` must reach.
inline AmbiguitySet node_target(const Tree& tree, int id) {
  const TreeNode& nd = tree.node(id);
  if (point_semantics(tree.metadata().variant)) return AmbiguitySet(Ellipsoid::point(nd.center), nd.covariance);
  return nd.ambiguity();
}

/// The initial set an edge out of `id` is certified for.
inline AmbiguitySet node_source(const Tree& tree, int id) {
  const TreeNode& nd = tree.node(id);
  if (point_semantics(tree.metadata().variant)) return AmbiguitySet(Ellipsoid::point(nd.center), nd.covariance);
  return nd.ambiguity();
}

}  // namespace drbrt::brt
