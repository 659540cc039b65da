#include "drbrt/cli/commands.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace drbrt;
using namespace drbrt::cli;
namespace fs = std::filesystem;

namespace {

const MatrixXd I2 = MatrixXd::Identity(2, 2);

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Double integrator experiment small enough to build and benchmark in seconds.
io::json small_config_json() {
  return io::json::parse(R"({
    "system": {"A": [[1, 0.1], [0, 1]], "B": [[0.005], [0.1]], "D": 0.05},
    "horizon": 10,
    "goal": {"center": [0, 0], "shape": 0.5, "covariance": 0.2},
    "scene": {"control_box": {"beta": 4, "epsilon": 0.05}},
    "tree": {"variant": "maxellipsoid", "iterations": 6, "seed": 3, "r_sample": [0.6, 0.6], "sigma_q": 0.05,
             "workspace": {"lo": [-3, -3], "hi": [3, 3]}},
    "linearization": {"sigma_r": 0.5, "y_r": 1},
    "query": {"r_inner": 1, "r_outer": 2, "covariance": 0.05, "count": 4, "M": 4}
  })");
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("drbrt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("config.json", small_config_json());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const io::json& j) const { io::write_text_file(path(name), io::dump(j)); }

  int build(const std::string& out, std::optional<int> iterations = std::nullopt, std::optional<std::string> variant = std::nullopt) {
    return cmd_build_tree(ctx, {path("config.json"), path(out), variant, std::nullopt, iterations});
  }

  std::ostringstream out, err;
  Context ctx{out, err};
  fs::path dir_;
};

}  // namespace

TEST(Config, ShippedConfigResolvesTheTripleIntegrator) {
  ExperimentConfig c = load_config(std::string(DRBRT_SOURCE_DIR) + "/configs/triple_integrator.json");
  LinearSystem ref = presets::triple_integrator_2d(0.1, 0.1);
  EXPECT_EQ(c.build.system.A, ref.A);
  EXPECT_EQ(c.build.system.B, ref.B);
  EXPECT_EQ(c.build.system.D, ref.D);
  EXPECT_EQ(c.build.scene.horizon, 20);
  EXPECT_EQ(c.build.scene.control_constraints.size(), 4u);
  EXPECT_TRUE(c.build.goal.mean_set.shape.isApprox(0.5 * MatrixXd::Identity(6, 6)));
  EXPECT_TRUE(c.build.goal.covariance.isApprox(0.1 * MatrixXd::Identity(6, 6)));
  EXPECT_TRUE(c.query.covariance.isApprox(0.2 * MatrixXd::Identity(6, 6)));
  EXPECT_EQ(c.build.r_sample, (VectorXd(6) << 5, 5, 2.5, 2.5, 1.25, 1.25).finished());
  EXPECT_EQ(c.query.r_inner, 35.0);
  EXPECT_EQ(c.query.r_outer, 40.0);
}

TEST(Config, DefaultsAndExplicitRoundTrip) {
  io::json j = small_config_json();
  j.erase("linearization");
  j.erase("query");
  j["tree"].erase("sigma_q");
  ExperimentConfig c = parse_config(j);
  EXPECT_EQ(c.build.selection, brt::Selection::Voronoi);
  EXPECT_FALSE(c.build.bilevel);
  EXPECT_TRUE(c.build.sigma_q.isApprox(0.1 * I2));
  EXPECT_TRUE(c.query.covariance.isApprox(0.2 * I2));
  EXPECT_EQ(c.query.M, 15);
  EXPECT_FALSE(c.build.refs.p_r.has_value());
  // The resolved form is a fixed point of parse/emit.
  io::json resolved = config_to_json(c);
  EXPECT_EQ(io::dump(config_to_json(parse_config(resolved))), io::dump(resolved));
  io::json with_pr = resolved;
  with_pr["linearization"]["p_r"] = 0.3;
  EXPECT_TRUE(parse_config(with_pr).build.refs.p_r->isApprox(0.3 * I2));
}

TEST(Config, RejectsMalformedInput) {
  auto broken = [](auto edit) {
    io::json j = small_config_json();
    edit(j);
    return j;
  };
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["system"] = {{"preset", "quadrotor"}}; })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["tree"].erase("r_sample"); })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["goal"]["covariance"] = -1; })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["tree"]["variant"] = "bestcovar"; })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["tree"]["iterations"] = "many"; })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["query"]["M"] = 0; })), io::ParseError);
  EXPECT_THROW(parse_config(broken([](io::json& j) { j["goal"]["shape"] = {{1, 0}, {0, 1}, {0, 0}}; })), io::ParseError);
  EXPECT_THROW(parse_config(io::json::array()), io::ParseError);
}

TEST(Config, SolverToleranceFromEnvironment) {
  programs::ProgramOptions opt;
  ::setenv("DRBRT_SOLVER_TOL", "1e-6", 1);
  apply_environment(opt);
  EXPECT_EQ(opt.solver.gap_tol, 1e-6);
  ::setenv("DRBRT_SOLVER_TOL", "tight", 1);
  EXPECT_THROW(apply_environment(opt), io::ParseError);
  ::unsetenv("DRBRT_SOLVER_TOL");
  programs::ProgramOptions fresh;
  apply_environment(fresh);
  EXPECT_EQ(fresh.solver.gap_tol, programs::ProgramOptions{}.solver.gap_tol);
}

TEST_F(Cli, BuildTreeIsReproducibleAndValidates) {
  ASSERT_EQ(build("a.json"), kOk) << err.str();
  ASSERT_EQ(build("b.json"), kOk) << err.str();
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_NE(out.str().find("accepted"), std::string::npos);
  brt::TreeArchive a = brt::load_tree(path("a.json"));
  EXPECT_GT(a.tree.size(), 1);
  EXPECT_EQ(a.tree.metadata().wall_time_s, 0.0);
  // The archived configuration reproduces the resolved input.
  EXPECT_EQ(io::dump(a.config), io::dump(config_to_json(load_config(path("config.json")))));
  EXPECT_EQ(cmd_validate(ctx, {path("a.json")}), kOk);

  ctx.timing = true;
  ASSERT_EQ(build("timed.json"), kOk);
  EXPECT_GT(brt::load_tree(path("timed.json")).tree.metadata().wall_time_s, 0.0);
}

TEST_F(Cli, BuildTreeVariantsAndSingleton) {
  ASSERT_EQ(build("single.json", 0), kOk);
  EXPECT_EQ(brt::load_tree(path("single.json")).tree.size(), 1);
  EXPECT_EQ(cmd_validate(ctx, {path("single.json")}), kOk);
  ASSERT_EQ(build("mc.json", 3, "maxcovar"), kOk);
  EXPECT_EQ(brt::load_tree(path("mc.json")).tree.metadata().variant, brt::Variant::MaxCovar);
  EXPECT_EQ(build("bad.json", 3, "nonsense"), kInputError);
}

TEST_F(Cli, BuildTreeErrorCodes) {
  EXPECT_EQ(cmd_build_tree(ctx, {path("missing.json"), path("t.json"), {}, {}, {}}), kInputError);
  io::write_text_file(path("garbage.json"), "{ not json");
  EXPECT_EQ(cmd_build_tree(ctx, {path("garbage.json"), path("t.json"), {}, {}, {}}), kInputError);
  EXPECT_NE(err.str().find("garbage.json"), std::string::npos);
  EXPECT_EQ(cmd_build_tree(ctx, {path("config.json"), path("no/such/dir/t.json"), {}, {}, 0}), kEnvironmentError);
}

TEST_F(Cli, ValidateNamesACorruptedEdge) {
  ASSERT_EQ(build("t.json"), kOk);
  io::json j = io::read_json_file(path("t.json"));
  ASSERT_GT(j["nodes"].size(), 1u);
  j["nodes"][1]["law"][0]["v"][0] = 1e3;
  write("corrupt.json", j);
  out.str("");
  EXPECT_EQ(cmd_validate(ctx, {path("corrupt.json")}), kNegative);
  int parent = j["nodes"][1]["parent"].get<int>();
  EXPECT_NE(out.str().find("edge 1 -> " + std::to_string(parent) + " FAILED"), std::string::npos) << out.str();
  io::write_text_file(path("trunc.json"), slurp(path("t.json")).substr(0, 100));
  EXPECT_EQ(cmd_validate(ctx, {path("trunc.json")}), kInputError);
}

TEST_F(Cli, PlanFromNodePayloadAndFailureModes) {
  ASSERT_EQ(build("t.json"), kOk);
  brt::TreeArchive a = brt::load_tree(path("t.json"));
  ASSERT_GT(a.tree.size(), 1);
  const auto& nd = a.tree.node(a.tree.size() - 1);
  io::json q{{"mean", io::to_json(nd.center)}, {"covariance", io::to_json(nd.covariance)}};
  write("q.json", q);
  ASSERT_EQ(cmd_plan(ctx, {path("t.json"), path("q.json"), path("plan.json"), a.tree.size()}), kOk) << err.str();
  EXPECT_NE(out.str().find("connected to node"), std::string::npos);
  planner::PlanArchive p = planner::load_plan(path("plan.json"));
  EXPECT_TRUE(planner::validate_plan(p.system, p.scene, p.plan, p.goal).passed);
  EXPECT_EQ(p.node_depths.size(), p.plan.node_path.size());

  EXPECT_EQ(cmd_plan(ctx, {path("t.json"), q.dump(), path("plan2.json"), a.tree.size()}), kOk);
  EXPECT_EQ(slurp(path("plan.json")), slurp(path("plan2.json")));

  std::string far = R"({"mean": [80, 0], "covariance": 0.05})";
  EXPECT_EQ(cmd_plan(ctx, {path("t.json"), far, path("plan3.json"), 2}), kNegative);
  EXPECT_FALSE(fs::exists(path("plan3.json")));
  io::write_text_file(path("broken.json"), "[1, 2");
  EXPECT_EQ(cmd_plan(ctx, {path("broken.json"), path("q.json"), path("plan4.json"), {}}), kInputError);
  EXPECT_EQ(cmd_plan(ctx, {path("t.json"), R"({"mean": [1, 2, 3], "covariance": 1})", path("plan5.json"), {}}), kInputError);
  EXPECT_EQ(cmd_plan(ctx, {path("t.json"), "{oops", path("plan6.json"), {}}), kInputError);
}

TEST_F(Cli, BenchIsReproducibleAndCountsSuccesses) {
  ASSERT_EQ(build("me.json"), kOk);
  ASSERT_EQ(build("mc.json", std::nullopt, "maxcovar"), kOk);
  BenchArgs args{path("config.json"), {path("me.json"), path("mc.json")}, 5, 9, path("r1.json"), {}};
  ASSERT_EQ(cmd_bench(ctx, args), kOk) << err.str();
  args.out = path("r2.json");
  ASSERT_EQ(cmd_bench(ctx, args), kOk);
  EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
  EXPECT_EQ(slurp(path("r1.csv")), slurp(path("r2.csv")));

  io::json r = io::read_json_file(path("r1.json"));
  ASSERT_EQ(r["trees"].size(), 2u);
  ASSERT_EQ(r["queries"].size(), 5u);
  EXPECT_NE(r["metadata"]["annulus_sampling"].get<std::string>().find("uniform by area"), std::string::npos);
  for (std::size_t t = 0; t < 2; ++t) {
    int found = 0;
    for (const auto& q : r["queries"]) {
      const auto& res = q["results"][t];
      if (res["found"].get<bool>()) {
        ++found;
        EXPECT_TRUE(res["validated"].get<bool>());
      }
    }
    EXPECT_EQ(r["trees"][t]["successes"].get<int>(), found);
  }
  for (const auto& q : r["queries"]) {
    double rad = std::hypot(q["mean"][0].get<double>(), q["mean"][1].get<double>());
    EXPECT_GE(rad, 1.0);
    EXPECT_LE(rad, 2.0);
  }
  std::istringstream csv(slurp(path("r1.csv")));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 10);

  // Different seeds draw different queries.
  args.seed = 10;
  args.out = path("r3.json");
  ASSERT_EQ(cmd_bench(ctx, args), kOk);
  EXPECT_NE(io::read_json_file(path("r3.json"))["queries"][0]["mean"], r["queries"][0]["mean"]);
}

TEST_F(Cli, BenchWithNoQueries) {
  ASSERT_EQ(build("t.json", 0), kOk);
  ASSERT_EQ(cmd_bench(ctx, {path("config.json"), {path("t.json")}, 0, 1, path("empty.json"), {}}), kOk);
  io::json r = io::read_json_file(path("empty.json"));
  EXPECT_TRUE(r["queries"].empty());
  EXPECT_EQ(r["trees"][0]["successes"].get<int>(), 0);
  EXPECT_EQ(cmd_bench(ctx, {path("config.json"), {path("missing.json")}, 1, 1, path("x.json"), {}}), kInputError);
}

TEST_F(Cli, SimulateNoiselessSingleSample) {
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 0.1, 0, 1;
  B << 0.005, 0.1;
  planner::PlanArchive pa;
  pa.system = LinearSystem(A, B, MatrixXd::Zero(2, 2));
  pa.scene.horizon = 5;
  pa.goal = AmbiguitySet(Ellipsoid(VectorXd::Zero(2), I2), I2);
  pa.plan.query = GaussianBelief((VectorXd(2) << 1, 0.5).finished(), 1e-24 * I2);
  ControlLaw law;
  for (int k = 0; k < 5; ++k) law.steps.push_back({MatrixXd::Zero(1, 2), VectorXd::Constant(1, -1.0)});
  pa.plan.segments = {law};
  pa.plan.law = law;
  pa.plan.node_path = {0};
  pa.plan.predicted_mean = propagate_mean(pa.system, pa.plan.query.mean, law).back();
  pa.plan.predicted_covariance = propagate_covariance(pa.system, pa.plan.query.covariance, law).back();
  planner::save_plan(path("plan.json"), pa);

  ASSERT_EQ(cmd_simulate(ctx, {path("plan.json"), 1, 1, path("traj.csv"), path("plot.svg"), path("rep.json")}), kOk) << err.str();
  auto means = propagate_mean(pa.system, pa.plan.query.mean, law);
  std::istringstream csv(slurp(path("traj.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "sample,step,x_0,x_1,u_0");
  int k = 0;
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    ASSERT_GE(cells.size(), 4u);
    EXPECT_NEAR(std::stod(cells[2]), means[k](0), 1e-9);
    EXPECT_NEAR(std::stod(cells[3]), means[k](1), 1e-9);
    ++k;
  }
  EXPECT_EQ(k, 6);
  std::string svg = slurp(path("plot.svg"));
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  std::size_t paths = 0;
  for (std::size_t at = svg.find("<path"); at != std::string::npos; at = svg.find("<path", at + 1)) ++paths;
  EXPECT_EQ(paths, 1u);
}

TEST_F(Cli, SimulateReportMatchesTheLibrary) {
  ASSERT_EQ(build("t.json"), kOk);
  brt::TreeArchive a = brt::load_tree(path("t.json"));
  const auto& nd = a.tree.node(a.tree.size() - 1);
  std::string q = io::json{{"mean", io::to_json(nd.center)}, {"covariance", io::to_json(nd.covariance)}}.dump();
  ASSERT_EQ(cmd_plan(ctx, {path("t.json"), q, path("plan.json"), a.tree.size()}), kOk) << err.str();
  ASSERT_EQ(cmd_simulate(ctx, {path("plan.json"), 300, 5, path("traj.csv"), path("plot.svg"), path("rep.json")}), kOk);
  planner::PlanArchive p = planner::load_plan(path("plan.json"));
  auto lib = planner::monte_carlo(p.system, p.scene, p.plan, p.goal, 300, 5);
  EXPECT_EQ(io::dump(io::read_json_file(path("rep.json"))), io::dump(report_to_json(lib)));
  std::string svg = slurp(path("plot.svg"));
  std::size_t paths = 0;
  for (std::size_t at = svg.find("<path"); at != std::string::npos; at = svg.find("<path", at + 1)) ++paths;
  EXPECT_EQ(paths, 300u);
  EXPECT_EQ(cmd_simulate(ctx, {path("plan.json"), 0, 5, path("traj2.csv"), {}, {}}), kInputError);
  EXPECT_EQ(cmd_simulate(ctx, {path("nothing.json"), 3, 5, path("traj3.csv"), {}, {}}), kInputError);
}
