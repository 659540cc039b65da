#pragma once

#include "drbrt/brt/build.hpp"
#include "drbrt/core/presets.hpp"
#include "drbrt/io/json.hpp"

#include <cstdlib>

namespace drbrt::cli {

/// Annulus query distribution for the benchmark.
struct QueryBlock {
  double r_inner = 35.0;
  double r_outer = 40.0;
  std::array<double, 2> velocity{-2.5, 2.5};        // applied to state dims 2, 3 when present
  std::array<double, 2> acceleration{-0.625, 0.625};  // applied to state dims 4, 5 when present
  MatrixXd covariance;
  int count = 250;
  int M = 15;

  void validate(int n) const {
    if (!(0.0 <= r_inner && r_inner <= r_outer)) throw std::invalid_argument("query: need 0 <= r_inner <= r_outer");
    if (!(velocity[0] <= velocity[1]) || !(acceleration[0] <= acceleration[1]))
      throw std::invalid_argument("query: empty velocity or acceleration range");
    require_dims(covariance.rows() == n && covariance.cols() == n, "query: covariance must be n x n");
    if (lambda_min(covariance) <= 0.0) throw std::invalid_argument("query: covariance must be PD");
    if (count < 0) throw std::invalid_argument("query: count must be >= 0");
    if (M < 1) throw std::invalid_argument("query: M must be >= 1");
  }
};

struct ExperimentConfig {
  brt::BuildConfig build;
  QueryBlock query;
};

namespace detail {

inline const io::json& section(const io::json& j, const char* key) {
  static const io::json empty = io::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw io::ParseError(std::string(key) + ": expected an object");
  return j.at(key);
}

template <class T>
T get_or(const io::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const io::json::exception&) {
    throw io::ParseError(where + "." + key + ": wrong type");
  }
}

inline std::array<double, 2> pair_or(const io::json& j, const char* key, std::array<double, 2> fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  VectorXd v = io::vector_from_json(j.at(key), where + "." + key);
  if (v.size() != 2) throw io::ParseError(where + "." + key + ": expected two numbers");
  return {v(0), v(1)};
}

inline LinearSystem parse_system(const io::json& j) {
  if (j.contains("preset")) {
    std::string name = get_or<std::string>(j, "preset", "", "system");
    if (name != "triple_integrator_2d") throw io::ParseError("system.preset: unknown preset '" + name + "'");
    return presets::triple_integrator_2d(get_or(j, "dt", 0.1, "system"), get_or(j, "noise", 0.1, "system"));
  }
  MatrixXd A = io::matrix_from_json(io::field(j, "A", "system"), "system.A");
  const int n = static_cast<int>(A.rows());
  return LinearSystem(A, io::matrix_from_json(io::field(j, "B", "system"), "system.B"),
                      io::matrix_from_json(io::field(j, "D", "system"), "system.D", n));
}

inline std::vector<HalfspaceChance> parse_chances(const io::json& scene, const char* list_key, const char* box_key, int dim) {
  std::vector<HalfspaceChance> out;
  if (scene.contains(list_key)) out = io::chances_from_json(scene.at(list_key), std::string("scene.") + list_key);
  if (scene.contains(box_key)) {
    const io::json& b = scene.at(box_key);
    std::string where = std::string("scene.") + box_key;
    auto box = presets::input_box(dim, io::number(io::field(b, "beta", where), where + ".beta"),
                                  io::number(io::field(b, "epsilon", where), where + ".epsilon"));
    out.insert(out.end(), box.begin(), box.end());
  }
  return out;
}

}  // namespace detail

/// Reads an experiment configuration; absent fields take documented defaults.
/// Matrices may be written as nested arrays, {rows, cols, data}, or a scalar meaning a multiple of I.
inline ExperimentConfig parse_config(const io::json& j) {
  using detail::get_or;
  using detail::section;
  try {
    if (!j.is_object()) throw io::ParseError("config: expected an object");
    ExperimentConfig c;
    brt::BuildConfig& b = c.build;
    b.system = detail::parse_system(io::field(j, "system", "config"));
    const int n = b.system.n(), m = b.system.m();

    const io::json& sc = section(j, "scene");
    b.scene.horizon = get_or(j, "horizon", get_or(sc, "horizon", 20, "scene"), "config");
    b.scene.state_constraints = detail::parse_chances(sc, "state_constraints", "state_box", n);
    b.scene.control_constraints = detail::parse_chances(sc, "control_constraints", "control_box", m);

    const io::json& g = io::field(j, "goal", "config");
    VectorXd center = g.contains("center") ? io::vector_from_json(g.at("center"), "goal.center") : VectorXd::Zero(n);
    b.goal = AmbiguitySet(Ellipsoid(center, io::matrix_from_json(io::field(g, "shape", "goal"), "goal.shape", n)),
                          io::matrix_from_json(io::field(g, "covariance", "goal"), "goal.covariance", n));

    const io::json& t = section(j, "tree");
    b.variant = brt::parse_variant(get_or<std::string>(t, "variant", "maxellipsoid", "tree"));
    b.iterations = get_or(t, "iterations", 15, "tree");
    b.seed = get_or<std::uint64_t>(t, "seed", 1, "tree");
    b.r_sample = io::vector_from_json(io::field(t, "r_sample", "tree"), "tree.r_sample");
    b.sigma_q = t.contains("sigma_q") ? io::matrix_from_json(t.at("sigma_q"), "tree.sigma_q", n) : MatrixXd(0.1 * MatrixXd::Identity(n, n));
    b.selection = brt::parse_selection(get_or<std::string>(t, "selection", "voronoi", "tree"));
    b.bilevel = get_or(t, "bilevel", false, "tree");
    const io::json& ws = section(t, "workspace");
    b.workspace.lo = detail::pair_or(ws, "lo", b.workspace.lo, "tree.workspace");
    b.workspace.hi = detail::pair_or(ws, "hi", b.workspace.hi, "tree.workspace");
    if (ws.contains("dims")) {
      auto d = get_or<std::vector<int>>(ws, "dims", {}, "tree.workspace");
      if (d.size() != 2) throw io::ParseError("tree.workspace.dims: expected two indices");
      b.workspace.dims = {d[0], d[1]};
    }

    const io::json& lin = section(j, "linearization");
    b.refs = programs::LinearizationRefs::defaults(n, m);
    if (lin.contains("sigma_r")) b.refs.sigma_r = io::matrix_from_json(lin.at("sigma_r"), "linearization.sigma_r", n);
    if (lin.contains("y_r")) b.refs.y_r = io::matrix_from_json(lin.at("y_r"), "linearization.y_r", m);
    if (lin.contains("p_r") && !lin.at("p_r").is_null()) b.refs.p_r = io::matrix_from_json(lin.at("p_r"), "linearization.p_r", n);

    const io::json& sol = section(j, "solver");
    b.options.solver.gap_tol = get_or(sol, "tol", b.options.solver.gap_tol, "solver");
    b.options.solver.feasibility_tol = get_or(sol, "feasibility_tol", b.options.solver.feasibility_tol, "solver");
    b.options.solver.max_newton = get_or(sol, "max_newton", b.options.solver.max_newton, "solver");
    b.options.validation_tol = get_or(sol, "validation_tol", b.options.validation_tol, "solver");
    b.options.relinearize = get_or(sol, "relinearize", b.options.relinearize, "solver");
    b.options.relinearize_passes = get_or(sol, "relinearize_passes", b.options.relinearize_passes, "solver");

    const io::json& q = section(j, "query");
    QueryBlock& qb = c.query;
    qb.r_inner = get_or(q, "r_inner", qb.r_inner, "query");
    qb.r_outer = get_or(q, "r_outer", qb.r_outer, "query");
    qb.velocity = detail::pair_or(q, "velocity", qb.velocity, "query");
    qb.acceleration = detail::pair_or(q, "acceleration", qb.acceleration, "query");
    qb.covariance = q.contains("covariance") ? io::matrix_from_json(q.at("covariance"), "query.covariance", n)
                                             : MatrixXd(0.2 * MatrixXd::Identity(n, n));
    qb.count = get_or(q, "count", qb.count, "query");
    qb.M = get_or(q, "M", qb.M, "query");

    b.validate();
    qb.validate(n);
    return c;
  } catch (const io::ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw io::ParseError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(io::read_json_file(path)); }

/// Fully resolved configuration in explicit form; parse_config(config_to_json(c)) reproduces c.
inline io::json config_to_json(const ExperimentConfig& c) {
  using io::to_json;
  const brt::BuildConfig& b = c.build;
  io::json lin{{"sigma_r", to_json(b.refs.sigma_r)}, {"y_r", to_json(b.refs.y_r)}, {"p_r", nullptr}};
  if (b.refs.p_r) lin["p_r"] = to_json(*b.refs.p_r);
  return {{"system", to_json(b.system)},
          {"horizon", b.scene.horizon},
          {"scene",
           {{"state_constraints", to_json(b.scene.state_constraints)}, {"control_constraints", to_json(b.scene.control_constraints)}}},
          {"goal", to_json(b.goal)},
          {"tree",
           {{"variant", brt::to_string(b.variant)},
            {"iterations", b.iterations},
            {"seed", b.seed},
            {"r_sample", to_json(b.r_sample)},
            {"sigma_q", to_json(b.sigma_q)},
            {"selection", brt::to_string(b.selection)},
            {"bilevel", b.bilevel},
            {"workspace", {{"lo", b.workspace.lo}, {"hi", b.workspace.hi}, {"dims", b.workspace.dims}}}}},
          {"linearization", std::move(lin)},
          {"solver",
           {{"tol", b.options.solver.gap_tol},
            {"feasibility_tol", b.options.solver.feasibility_tol},
            {"max_newton", b.options.solver.max_newton},
            {"validation_tol", b.options.validation_tol},
            {"relinearize", b.options.relinearize},
            {"relinearize_passes", b.options.relinearize_passes}}},
          {"query",
           {{"r_inner", c.query.r_inner},
            {"r_outer", c.query.r_outer},
            {"velocity", c.query.velocity},
            {"acceleration", c.query.acceleration},
            {"covariance", to_json(c.query.covariance)},
            {"count", c.query.count},
            {"M", c.query.M}}}};
}

/// DRBRT_SOLVER_TOL, when set, replaces the solver's duality-gap tolerance.
inline void apply_environment(programs::ProgramOptions& opt) {
  const char* v = std::getenv("DRBRT_SOLVER_TOL");
  if (!v || !*v) return;
  char* end = nullptr;
  double tol = std::strtod(v, &end);
  if (end == v || *end != '\0' || !(tol > 0.0)) throw io::ParseError(std::string("DRBRT_SOLVER_TOL: not a positive number: ") + v);
  opt.solver.gap_tol = tol;
}

}  // namespace drbrt::cli
