#pragma once

#include "drbrt/planner/plan.hpp"

namespace drbrt::planner {

inline constexpr int kPlanFormatVersion = 1;

/// A plan with everything needed to simulate it without the tree.
struct PlanArchive {
  LinearSystem system;
  PlanningScene scene;
  AmbiguitySet goal;
  Plan plan;
  std::vector<int> node_depths;  // depth of each node on the path
};

inline io::json plan_to_json(const PlanArchive& a) {
  using io::to_json;
  io::json segs = io::json::array();
  for (const auto& s : a.plan.segments) segs.push_back(to_json(s));
  return {{"format_version", kPlanFormatVersion},
          {"system", to_json(a.system)},
          {"scene", to_json(a.scene)},
          {"goal", to_json(a.goal)},
          {"query", to_json(a.plan.query)},
          {"node_path", a.plan.node_path},
          {"node_depths", a.node_depths},
          {"segments", std::move(segs)},
          {"predicted", {{"mean", to_json(a.plan.predicted_mean)}, {"covariance", to_json(a.plan.predicted_covariance)}}}};
}

inline PlanArchive plan_from_json(const io::json& j) {
  using io::field;
  try {
    int version = field(j, "format_version", "plan archive").get<int>();
    if (version != kPlanFormatVersion) throw io::ParseError("plan archive: unsupported format_version " + std::to_string(version));
    PlanArchive a;
    a.system = io::system_from_json(field(j, "system", "plan archive"));
    a.scene = io::scene_from_json(field(j, "scene", "plan archive"));
    a.scene.validate(a.system);
    a.goal = io::ambiguity_from_json(field(j, "goal", "plan archive"), "goal");
    a.plan.query = io::belief_from_json(field(j, "query", "plan archive"), "query");
    a.plan.node_path = field(j, "node_path", "plan archive").get<std::vector<int>>();
    if (j.contains("node_depths")) a.node_depths = j.at("node_depths").get<std::vector<int>>();
    for (const auto& s : field(j, "segments", "plan archive")) {
      a.plan.segments.push_back(io::law_from_json(s, "segment"));
      a.plan.law = concatenate(a.plan.law, a.plan.segments.back());
    }
    a.plan.law.validate(a.system);
    const auto& pr = field(j, "predicted", "plan archive");
    a.plan.predicted_mean = io::vector_from_json(field(pr, "mean", "predicted"), "predicted.mean");
    a.plan.predicted_covariance = io::matrix_from_json(field(pr, "covariance", "predicted"), "predicted.covariance");
    return a;
  } catch (const io::ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw io::ParseError(std::string("plan archive: ") + e.what());
  }
}

inline void save_plan(const std::string& path, const PlanArchive& a) { io::write_text_file(path, io::dump(plan_to_json(a))); }
inline PlanArchive load_plan(const std::string& path) { return plan_from_json(io::read_json_file(path)); }

}  // namespace drbrt::planner
