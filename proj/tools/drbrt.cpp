#include "drbrt/cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace drbrt;

int main(int argc, char** argv) {
  CLI::App app{"Distributionally robust backward reachable trees"};
  app.require_subcommand(1);
  app.fallthrough();
  cli::Context ctx{std::cout, std::cerr};
  bool verbose = false, quiet = false;
  app.add_flag("--timing", ctx.timing, "Write wall-clock fields into artifacts (breaks byte reproducibility)");
  app.add_flag("-v,--verbose", verbose, "Log progress");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  cli::BuildTreeArgs build;
  auto* b = app.add_subcommand("build-tree", "Grow a tree from a configuration file");
  b->add_option("--config", build.config, "Experiment configuration")->required();
  b->add_option("--out", build.out, "Tree archive to write")->required();
  b->add_option("--variant", build.variant, "maxellipsoid | maxcovar | randcovar");
  b->add_option("--seed", build.seed, "Override tree.seed");
  b->add_option("--iterations", build.iterations, "Override tree.iterations");

  cli::PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Connect one query distribution to a tree");
  p->add_option("--tree", plan.tree, "Tree archive")->required();
  p->add_option("--query", plan.query, "Query file or inline {\"mean\": [...], \"covariance\": ...}")->required();
  p->add_option("--m", plan.M, "Number of nearest nodes to try");
  p->add_option("--out", plan.out, "Plan archive to write")->required();

  cli::BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Annulus planning benchmark over one or more trees");
  be->add_option("--config", bench.config, "Experiment configuration")->required();
  be->add_option("--trees", bench.trees, "Tree archives")->required()->delimiter(',');
  be->add_option("--queries", bench.queries, "Override query.count");
  be->add_option("--seed", bench.seed, "Query sampling seed");
  be->add_option("--m", bench.M, "Override query.M");
  be->add_option("--out", bench.out, "Report to write; a CSV is written next to it")->required();

  cli::SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Monte-Carlo rollouts of a plan");
  s->add_option("--plan", sim.plan, "Plan archive")->required();
  s->add_option("--samples", sim.samples, "Number of rollouts");
  s->add_option("--seed", sim.seed, "Sampling seed");
  s->add_option("--out", sim.out, "Trajectory CSV")->required();
  s->add_option("--svg", sim.svg, "x-y projection plot");
  s->add_option("--report", sim.report, "Empirical violation report");

  cli::ValidateArgs val;
  auto* v = app.add_subcommand("validate", "Re-check every edge certificate of a tree");
  v->add_option("--tree", val.tree, "Tree archive")->required();
  v->add_option("--tol", val.tol, "Validation tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kInputError;
  }
  log::set_level(quiet ? log::Level::Off : verbose ? log::Level::Info : log::Level::Warn);

  if (*b) return cli::cmd_build_tree(ctx, build);
  if (*p) return cli::cmd_plan(ctx, plan);
  if (*be) return cli::cmd_bench(ctx, bench);
  if (*s) return cli::cmd_simulate(ctx, sim);
  return cli::cmd_validate(ctx, val);
}
