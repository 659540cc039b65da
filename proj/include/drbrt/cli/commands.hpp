#pragma once

#include "drbrt/brt/archive.hpp"
#include "drbrt/cli/config.hpp"
#include "drbrt/cli/svg.hpp"
#include "drbrt/planner/archive.hpp"
#include "drbrt/planner/montecarlo.hpp"

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>

namespace drbrt::cli {

enum ExitCode : int { kOk = 0, kNegative = 1, kInputError = 2, kEnvironmentError = 3 };

/// Failure of the surroundings (unwritable output, missing backend), not of the input.
struct EnvironmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool timing = false;  // wall-clock fields are written only when set, keeping artifacts reproducible
};

/// Runs a command body and maps exceptions to exit codes.
inline int guarded(Context& ctx, const std::function<int()>& body) {
  try {
    return body();
  } catch (const io::ParseError& e) {
    ctx.err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    ctx.err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::out_of_range& e) {
    ctx.err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kEnvironmentError;
  }
}

inline void write_output(const std::string& path, const std::string& text) {
  try {
    io::write_text_file(path, text);
  } catch (const std::exception& e) {
    throw EnvironmentError(e.what());
  }
}

/// Replaces the extension of `path` (or appends one).
inline std::string with_extension(const std::string& path, const std::string& ext) {
  auto slash = path.find_last_of('/');
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
  return path.substr(0, dot) + ext;
}

/// Planning settings stored with a tree, or defaults when the archive carries no configuration.
inline ExperimentConfig archived_config(const brt::TreeArchive& a) {
  if (!a.config.is_null()) return parse_config(a.config);
  ExperimentConfig c;
  c.build.system = a.system;
  c.build.scene = a.scene;
  c.build.goal = a.tree.goal();
  c.build.refs = programs::LinearizationRefs::defaults(a.system.n(), a.system.m());
  c.query.covariance = 0.2 * MatrixXd::Identity(a.system.n(), a.system.n());
  return c;
}

// ---------------------------------------------------------------------------------------------

struct BuildTreeArgs {
  std::string config;
  std::string out;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
};

inline int cmd_build_tree(Context& ctx, const BuildTreeArgs& args) {
  return guarded(ctx, [&] {
    ExperimentConfig cfg = load_config(args.config);
    if (args.variant) cfg.build.variant = brt::parse_variant(*args.variant);
    if (args.seed) cfg.build.seed = *args.seed;
    if (args.iterations) cfg.build.iterations = *args.iterations;
    apply_environment(cfg.build.options);
    cfg.build.validate();
    brt::Tree tree = brt::build_tree(cfg.build);
    brt::TreeArchive a{cfg.build.system, cfg.build.scene, tree, config_to_json(cfg)};
    write_output(args.out, io::dump(brt::tree_to_json(a, ctx.timing)));
    const auto& m = tree.metadata();
    ctx.out << brt::to_string(m.variant) << ": accepted " << m.accepted << "/" << m.attempted << " attempted, " << tree.size()
            << " nodes";
    if (ctx.timing) ctx.out << ", wall time " << std::fixed << std::setprecision(2) << m.wall_time_s << " s" << std::defaultfloat;
    ctx.out << "\n";
    for (const auto& [reason, count] : m.rejections) ctx.out << "  rejected (" << reason << "): " << count << "\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------------------------

struct PlanArgs {
  std::string tree;
  std::string query;  // path to a {mean, covariance} document, or the document itself
  std::string out;
  std::optional<int> M;
};

inline GaussianBelief read_query(const std::string& spec) {
  std::size_t first = spec.find_first_not_of(" \t\n");
  io::json j;
  if (first != std::string::npos && spec[first] == '{') {
    try {
      j = io::json::parse(spec);
    } catch (const io::json::parse_error& e) {
      throw io::ParseError(std::string("inline query: ") + e.what());
    }
  } else {
    j = io::read_json_file(spec);
  }
  return io::belief_from_json(j, "query");
}

inline int cmd_plan(Context& ctx, const PlanArgs& args) {
  return guarded(ctx, [&] {
    brt::TreeArchive a = brt::load_tree(args.tree);
    ExperimentConfig cfg = archived_config(a);
    apply_environment(cfg.build.options);
    GaussianBelief q = read_query(args.query);
    require_dims(q.dim() == a.system.n(), "query dimension does not match the tree's system");
    int M = args.M.value_or(cfg.query.M);
    auto res = planner::find_path(a.tree, q, M, a.system, a.scene, cfg.build.refs, cfg.build.options);
    if (!res.found()) {
      ctx.out << "no path found after " << res.attempts.size() << " attempts\n";
      return kNegative;
    }
    const planner::Plan& p = *res.plan;
    planner::PlanArchive pa{a.system, a.scene, a.tree.goal(), p, {}};
    for (int id : p.node_path) pa.node_depths.push_back(a.tree.node(id).depth);
    write_output(args.out, io::dump(planner::plan_to_json(pa)));
    ctx.out << "connected to node " << p.node_path.front() << " (depth " << a.tree.node(p.node_path.front()).depth << ") after "
            << res.attempts.size() << " attempts; plan length " << p.law.length() << " steps\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------------------------

/// Query mean with x-y uniform over the annulus by area and uniform velocity/acceleration boxes.
inline VectorXd annulus_query(const QueryBlock& q, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double r2 = q.r_inner * q.r_inner + u01(rng) * (q.r_outer * q.r_outer - q.r_inner * q.r_inner);
  double r = std::sqrt(r2), th = 2.0 * M_PI * u01(rng);
  VectorXd mu = VectorXd::Zero(n);
  mu(0) = r * std::cos(th);
  if (n > 1) mu(1) = r * std::sin(th);
  for (int i = 2; i < std::min(n, 4); ++i) mu(i) = q.velocity[0] + u01(rng) * (q.velocity[1] - q.velocity[0]);
  for (int i = 4; i < std::min(n, 6); ++i) mu(i) = q.acceleration[0] + u01(rng) * (q.acceleration[1] - q.acceleration[0]);
  return mu;
}

struct BenchArgs {
  std::string config;
  std::vector<std::string> trees;
  std::optional<int> queries;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<int> M;
};

struct BenchTreeSummary {
  std::string path;
  std::string variant;
  int nodes = 0;
  int successes = 0;
};

inline int cmd_bench(Context& ctx, const BenchArgs& args) {
  return guarded(ctx, [&] {
    ExperimentConfig cfg = load_config(args.config);
    apply_environment(cfg.build.options);
    const int Q = args.queries.value_or(cfg.query.count);
    const int M = args.M.value_or(cfg.query.M);
    if (Q < 0) throw std::invalid_argument("bench: queries must be >= 0");
    if (M < 1) throw std::invalid_argument("bench: M must be >= 1");
    std::vector<brt::TreeArchive> trees;
    for (const auto& path : args.trees) {
      trees.push_back(brt::load_tree(path));
      require_dims(trees.back().system.n() == cfg.build.system.n(), "bench: tree '" + path + "' has a different state dimension");
    }
    const int n = cfg.build.system.n();

    std::vector<BenchTreeSummary> summary;
    for (std::size_t t = 0; t < trees.size(); ++t)
      summary.push_back({args.trees[t], brt::to_string(trees[t].tree.metadata().variant), trees[t].tree.size(), 0});

    std::ostringstream csv;
    csv << "query,tree,variant,found,node,depth,attempts,validated" << (ctx.timing ? ",time_s" : "") << "\n";
    io::json queries = io::json::array();
    for (int i = 0; i < Q; ++i) {
      auto rng = planner::sample_stream(args.seed, static_cast<std::uint64_t>(i));
      GaussianBelief q(annulus_query(cfg.query, n, rng), cfg.query.covariance);
      io::json results = io::json::array();
      for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto& a = trees[t];
        auto t0 = std::chrono::steady_clock::now();
        auto res = planner::find_path(a.tree, q, M, a.system, a.scene, cfg.build.refs, cfg.build.options);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        io::json r{{"tree", t}, {"found", res.found()}, {"attempts", res.attempts.size()}};
        int node = -1, depth = -1;
        bool validated = false;
        if (res.found()) {
          node = res.plan->node_path.front();
          depth = a.tree.node(node).depth;
          validated = planner::validate_plan(a.system, a.scene, *res.plan, a.tree.goal()).passed;
          ++summary[t].successes;
          r["node"] = node;
          r["depth"] = depth;
          r["validated"] = validated;
        }
        if (ctx.timing) r["time_s"] = secs;
        results.push_back(std::move(r));
        csv << i << "," << t << "," << summary[t].variant << "," << res.found() << "," << node << "," << depth << ","
            << res.attempts.size() << "," << validated;
        if (ctx.timing) csv << "," << secs;
        csv << "\n";
      }
      queries.push_back({{"index", i}, {"mean", io::to_json(q.mean)}, {"results", std::move(results)}});
    }

    io::json tree_json = io::json::array();
    for (std::size_t t = 0; t < trees.size(); ++t) {
      io::json s{{"path", summary[t].path},
                 {"variant", summary[t].variant},
                 {"nodes", summary[t].nodes},
                 {"successes", summary[t].successes},
                 {"queries", Q}};
      if (ctx.timing) s["build_wall_time_s"] = trees[t].tree.metadata().wall_time_s;
      tree_json.push_back(std::move(s));
      ctx.out << summary[t].variant << " (" << summary[t].path << ", " << summary[t].nodes << " nodes): " << summary[t].successes
              << " out of " << Q << "\n";
    }
    io::json report{{"format_version", 1},
                    {"metadata",
                     {{"seed", args.seed},
                      {"queries", Q},
                      {"M", M},
                      {"annulus_sampling", "uniform by area: r = sqrt(U(r_inner^2, r_outer^2)), angle uniform"},
                      {"config", config_to_json(cfg)}}},
                    {"trees", std::move(tree_json)},
                    {"queries", std::move(queries)}};
    write_output(args.out, io::dump(report));
    write_output(with_extension(args.out, ".csv"), csv.str());
    return kOk;
  });
}

// ---------------------------------------------------------------------------------------------

struct SimulateArgs {
  std::string plan;
  int samples = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::optional<std::string> svg;
  std::optional<std::string> report;
};

inline io::json report_to_json(const planner::McReport& r) {
  return {{"samples", r.samples},
          {"control_violation_rate", r.control_violation_rate},
          {"state_violation_rate", r.state_violation_rate},
          {"worst_control_violation_rate", r.worst_control_rate()},
          {"terminal_goal_frequency", r.terminal_goal_frequency},
          {"terminal_mean", io::to_json(r.terminal_mean)},
          {"terminal_covariance", io::to_json(r.terminal_covariance)}};
}

inline int cmd_simulate(Context& ctx, const SimulateArgs& args) {
  return guarded(ctx, [&] {
    if (args.samples < 1) throw std::invalid_argument("simulate: samples must be >= 1");
    planner::PlanArchive pa = planner::load_plan(args.plan);
    const int n = pa.system.n();
    std::ostringstream csv_text;
    planner::TrajectoryCsv csv(csv_text, n, pa.system.m());
    auto write_row = csv.sink();
    std::vector<Polyline> paths(args.svg ? args.samples : 0);
    // One-dimensional systems are drawn against the step index.
    auto project = [n](int k, const VectorXd& x) { return n > 1 ? std::array<double, 2>{x(0), x(1)} : std::array<double, 2>{double(k), x(0)}; };
    auto sink = [&](int s, int k, const VectorXd& x, const VectorXd* u) {
      write_row(s, k, x, u);
      if (args.svg) paths[s].push_back(project(k, x));
    };
    auto rep = planner::monte_carlo(pa.system, pa.scene, pa.plan, pa.goal, args.samples, args.seed, sink);
    write_output(args.out, csv_text.str());
    if (args.report) write_output(*args.report, io::dump(report_to_json(rep)));
    if (args.svg) {
      SvgPlot plot;
      for (auto& p : paths) plot.trajectory(std::move(p));
      if (n > 1) {
        plot.outline(ellipse_outline(pa.goal.mean_set.center.head<2>(), pa.goal.mean_set.shape.topLeftCorner<2, 2>()), "green");
        plot.outline(ellipse_outline(pa.plan.query.mean.head<2>(), 9.0 * pa.plan.query.covariance.topLeftCorner<2, 2>()), "red");
      }
      write_output(*args.svg, plot.render());
    }
    ctx.out << rep.samples << " samples; worst control violation rate " << rep.worst_control_rate()
            << "; terminal goal frequency " << rep.terminal_goal_frequency << "\n";
    return kOk;
  });
}

// ---------------------------------------------------------------------------------------------

struct ValidateArgs {
  std::string tree;
  double tol = 1e-6;
};

inline int cmd_validate(Context& ctx, const ValidateArgs& args) {
  return guarded(ctx, [&] {
    brt::TreeArchive a = brt::load_tree(args.tree);
    auto chk = brt::validate_tree(a.tree, a.system, a.scene, args.tol);
    ctx.out << chk.edges.size() << " edges checked";
    if (!chk.edges.empty())
    {
      auto margin = [](double m) { return std::isfinite(m) ? std::to_string(m) : std::string("none"); };
      ctx.out << "; worst state margin " << margin(chk.worst_state_margin) << ", worst control margin "
              << margin(chk.worst_control_margin);
    }
    ctx.out << "\n";
    for (const auto& e : chk.edges)
      if (!e.report.passed)
        ctx.out << "edge " << e.child << " -> " << e.parent << " FAILED: "
                << (e.report.violations.empty() ? std::string("unknown") : e.report.violations.front()) << "\n";
    return chk.passed ? kOk : kNegative;
  });
}

}  // namespace drbrt::cli
