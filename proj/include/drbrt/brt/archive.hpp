#pragma once

#include "drbrt/brt/tree.hpp"
#include "drbrt/io/json.hpp"

namespace drbrt::brt {

inline constexpr int kTreeFormatVersion = 1;

/// A tree together with the system and scene its certificates refer to.
struct TreeArchive {
  LinearSystem system;
  PlanningScene scene;
  Tree tree;
  io::json config;  // resolved build configuration, kept for audit
};

/// With include_timing = false the wall time is written as 0 so that archives are byte-reproducible.
inline io::json tree_to_json(const TreeArchive& a, bool include_timing = true) {
  using io::to_json;
  const Tree& t = a.tree;
  io::json nodes = io::json::array();
  for (const auto& nd : t.nodes()) {
    io::json j{{"id", nd.id},
               {"center", to_json(nd.center)},
               {"shape", to_json(nd.shape)},
               {"covariance", to_json(nd.covariance)},
               {"parent", nd.parent ? io::json(*nd.parent) : io::json(nullptr)},
               {"depth", nd.depth},
               {"law", nd.law_to_parent ? to_json(*nd.law_to_parent) : io::json::array()}};
    nodes.push_back(std::move(j));
  }
  const auto& m = t.metadata();
  io::json meta{{"seed", m.seed},
                {"variant", to_string(m.variant)},
                {"iterations", m.iterations},
                {"attempted", m.attempted},
                {"accepted", m.accepted},
                {"wall_time_s", include_timing ? m.wall_time_s : 0.0},
                {"rejections", m.rejections}};
  if (!a.config.is_null()) meta["config"] = a.config;
  return {{"format_version", kTreeFormatVersion},
          {"system", to_json(a.system)},
          {"goal", to_json(t.goal())},
          {"scene", to_json(a.scene)},
          {"nodes", std::move(nodes)},
          {"metadata", std::move(meta)}};
}

inline TreeArchive tree_from_json(const io::json& j) {
  using io::field;
  try {
    if (!j.is_object()) throw io::ParseError("tree archive: expected an object");
    int version = field(j, "format_version", "tree archive").get<int>();
    if (version != kTreeFormatVersion) throw io::ParseError("tree archive: unsupported format_version " + std::to_string(version));
    TreeArchive a;
    a.system = io::system_from_json(field(j, "system", "tree archive"));
    a.scene = io::scene_from_json(field(j, "scene", "tree archive"));
    a.scene.validate(a.system);
    AmbiguitySet goal = io::ambiguity_from_json(field(j, "goal", "tree archive"), "goal");
    std::vector<TreeNode> nodes;
    for (const auto& jn : field(j, "nodes", "tree archive")) {
      TreeNode nd;
      std::string where = "node " + std::to_string(nodes.size());
      nd.id = field(jn, "id", where).get<int>();
      nd.center = io::vector_from_json(field(jn, "center", where), where + ".center");
      nd.shape = io::matrix_from_json(field(jn, "shape", where), where + ".shape");
      nd.covariance = io::matrix_from_json(field(jn, "covariance", where), where + ".covariance");
      const auto& p = field(jn, "parent", where);
      if (!p.is_null()) {
        nd.parent = p.get<int>();
        nd.law_to_parent = io::law_from_json(field(jn, "law", where), where + ".law");
        nd.law_to_parent->validate(a.system);
      }
      nd.depth = field(jn, "depth", where).get<int>();
      require_dims(nd.center.size() == a.system.n(), where + ": center dimension");
      nodes.push_back(std::move(nd));
    }
    BuildMetadata meta;
    const auto& jm = field(j, "metadata", "tree archive");
    meta.seed = field(jm, "seed", "metadata").get<std::uint64_t>();
    meta.variant = parse_variant(field(jm, "variant", "metadata").get<std::string>());
    meta.iterations = field(jm, "iterations", "metadata").get<int>();
    meta.attempted = field(jm, "attempted", "metadata").get<int>();
    meta.accepted = field(jm, "accepted", "metadata").get<int>();
    meta.wall_time_s = field(jm, "wall_time_s", "metadata").get<double>();
    if (jm.contains("rejections")) meta.rejections = jm.at("rejections").get<std::map<std::string, int>>();
    if (jm.contains("config")) a.config = jm.at("config");
    a.tree = Tree::from_nodes(goal, std::move(nodes), std::move(meta));
    return a;
  } catch (const io::ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw io::ParseError(std::string("tree archive: ") + e.what());
  }
}

inline void save_tree(const std::string& path, const TreeArchive& a, bool include_timing = true) {
  io::write_text_file(path, io::dump(tree_to_json(a, include_timing)));
}

inline TreeArchive load_tree(const std::string& path) { return tree_from_json(io::read_json_file(path)); }

}  // namespace drbrt::brt
