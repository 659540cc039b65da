#pragma once

#include "drbrt/core/types.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace drbrt::io {

using json = nlohmann::json;

/// Malformed or inconsistent input document.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json to_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

/// Matrices are stored row-major with an explicit shape.
inline json to_json(const MatrixXd& m) {
  json data = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline VectorXd vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], where);
  return v;
}

/// Accepts {rows, cols, data}, nested row arrays, or (with n > 0) a scalar meaning scalar * I_n.
inline MatrixXd matrix_from_json(const json& j, const std::string& where, int n = 0) {
  if (j.is_number()) {
    if (n <= 0) throw ParseError(where + ": scalar shorthand needs a known dimension");
    return j.get<double>() * MatrixXd::Identity(n, n);
  }
  if (j.is_object()) {
    int r = field(j, "rows", where).get<int>(), c = field(j, "cols", where).get<int>();
    const json& d = field(j, "data", where);
    if (r < 0 || c < 0 || !d.is_array() || d.size() != static_cast<std::size_t>(r) * c)
      throw ParseError(where + ": data length does not match rows x cols");
    MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < c; ++k) m(i, k) = number(d[i * c + k], where);
    return m;
  }
  if (j.is_array()) {
    if (j.empty()) return MatrixXd(0, 0);
    if (!j[0].is_array()) throw ParseError(where + ": expected nested row arrays");
    const std::size_t c = j[0].size();
    MatrixXd m(j.size(), c);
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_array() || j[i].size() != c) throw ParseError(where + ": ragged matrix rows");
      for (std::size_t k = 0; k < c; ++k) m(i, k) = number(j[i][k], where);
    }
    return m;
  }
  throw ParseError(where + ": expected a matrix");
}

inline json to_json(const LinearSystem& s) { return {{"A", to_json(s.A)}, {"B", to_json(s.B)}, {"D", to_json(s.D)}}; }

inline LinearSystem system_from_json(const json& j) {
  return LinearSystem(matrix_from_json(field(j, "A", "system"), "system.A"), matrix_from_json(field(j, "B", "system"), "system.B"),
                      matrix_from_json(field(j, "D", "system"), "system.D"));
}

inline json to_json(const AmbiguitySet& g) {
  return {{"center", to_json(g.mean_set.center)}, {"shape", to_json(g.mean_set.shape)}, {"covariance", to_json(g.covariance)}};
}

inline AmbiguitySet ambiguity_from_json(const json& j, const std::string& where) {
  VectorXd c = vector_from_json(field(j, "center", where), where + ".center");
  const int n = static_cast<int>(c.size());
  return AmbiguitySet(Ellipsoid(c, matrix_from_json(field(j, "shape", where), where + ".shape", n)),
                      matrix_from_json(field(j, "covariance", where), where + ".covariance", n));
}

inline json to_json(const GaussianBelief& g) { return {{"mean", to_json(g.mean)}, {"covariance", to_json(g.covariance)}}; }

inline GaussianBelief belief_from_json(const json& j, const std::string& where) {
  VectorXd m = vector_from_json(field(j, "mean", where), where + ".mean");
  return GaussianBelief(m, matrix_from_json(field(j, "covariance", where), where + ".covariance", static_cast<int>(m.size())));
}

inline json to_json(const std::vector<HalfspaceChance>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back({{"alpha", to_json(c.alpha)}, {"beta", c.beta}, {"epsilon", c.epsilon}});
  return a;
}

inline std::vector<HalfspaceChance> chances_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<HalfspaceChance> out;
  for (const auto& c : j)
    out.emplace_back(vector_from_json(field(c, "alpha", where), where + ".alpha"), number(field(c, "beta", where), where),
                     number(field(c, "epsilon", where), where));
  return out;
}

inline json to_json(const PlanningScene& s) {
  return {{"horizon", s.horizon},
          {"state_constraints", to_json(s.state_constraints)},
          {"control_constraints", to_json(s.control_constraints)}};
}

inline PlanningScene scene_from_json(const json& j) {
  PlanningScene s;
  s.horizon = field(j, "horizon", "scene").get<int>();
  if (j.contains("state_constraints")) s.state_constraints = chances_from_json(j.at("state_constraints"), "scene.state_constraints");
  if (j.contains("control_constraints"))
    s.control_constraints = chances_from_json(j.at("control_constraints"), "scene.control_constraints");
  return s;
}

inline json to_json(const ControlLaw& law) {
  json a = json::array();
  for (const auto& st : law.steps) a.push_back({{"K", to_json(st.K)}, {"v", to_json(st.v)}});
  return a;
}

inline ControlLaw law_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of steps");
  ControlLaw law;
  for (const auto& st : j)
    law.steps.push_back({matrix_from_json(field(st, "K", where), where + ".K"), vector_from_json(field(st, "v", where), where + ".v")});
  return law;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace drbrt::io
