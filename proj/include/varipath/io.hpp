#pragma once

#include "varipath/estimator.hpp"
#include "varipath/solver.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace varipath {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Problem ingest. Field names are normative:
//   {"n":…, "family":…, "params":[…], "theta":{"family":…, "coefficients":[…]},
//    "mu":…, "xi":…, "delta":…, "A":[[…]], "b":[…], "a":[…]}
// ---------------------------------------------------------------------------

namespace detail {

inline Vec vec_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError("problem JSON: '" + field + "' must be an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("problem JSON: '" + field + "' must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline Mat mat_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("problem JSON: '" + field + "' must be an array of rows");
  const std::size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ConfigError("problem JSON: ragged rows in '" + field + "'");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json vec_to_json(const Vec& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json mat_to_json(const Mat& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

inline const json& require(const json& j, const std::string& field) {
  if (!j.contains(field)) throw ConfigError("problem JSON: missing field '" + field + "'");
  return j.at(field);
}

}  // namespace detail

inline VariationalProblem problem_from_json(const json& j) {
  VariationalProblem p;
  p.lagrangian.n = detail::require(j, "n").get<int>();
  p.lagrangian.family = detail::require(j, "family").get<std::string>();
  p.lagrangian.params =
      j.contains("params") ? detail::vec_from_json(j.at("params"), "params") : Vec();
  const json& th = detail::require(j, "theta");
  p.theta.family = detail::require(th, "family").get<std::string>();
  p.theta.coefficients = detail::vec_from_json(detail::require(th, "coefficients"), "coefficients");
  p.reg.mu = detail::require(j, "mu").get<double>();
  p.reg.xi = detail::require(j, "xi").get<double>();
  p.reg.delta = detail::require(j, "delta").get<double>();
  p.endpoint.A = detail::mat_from_json(detail::require(j, "A"), "A");
  p.endpoint.b = detail::vec_from_json(detail::require(j, "b"), "b");
  // The reference point defaults to the origin, which validate() accepts
  // only when A 0 <= b.
  p.a = j.contains("a") ? detail::vec_from_json(j.at("a"), "a")
                        : Vec(Vec::Zero(p.lagrangian.n));
  p.validate();
  return p;
}

inline json problem_to_json(const VariationalProblem& p) {
  json j;
  j["n"] = p.lagrangian.n;
  j["family"] = p.lagrangian.family;
  j["params"] = detail::vec_to_json(p.lagrangian.params);
  j["theta"] = {{"family", p.theta.family},
                {"coefficients", detail::vec_to_json(p.theta.coefficients)}};
  j["mu"] = p.reg.mu;
  j["xi"] = p.reg.xi;
  j["delta"] = p.reg.delta;
  j["A"] = detail::mat_to_json(p.endpoint.A);
  j["b"] = detail::vec_to_json(p.endpoint.b);
  j["a"] = detail::vec_to_json(p.a);
  return j;
}

inline VariationalProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse problem file '" + path + "': " + e.what());
  }
  return problem_from_json(j);
}

// ---------------------------------------------------------------------------
// Report emission. Key order is alphabetical (nlohmann's object ordering),
// doubles round-trip exactly; identical inputs give byte-identical output.
// ---------------------------------------------------------------------------

inline json constant_to_json(const ConstantRecord& c) {
  return {{"value", c.value}, {"provenance", c.prov.str()}};
}

inline json constants_to_json(const RegularityConstants& rc) {
  json j;
  j["r0"] = constant_to_json(rc.r0);
  j["c"] = constant_to_json(rc.c);
  j["Lambda0"] = constant_to_json(rc.Lambda0);
  j["Lambda1"] = constant_to_json(rc.Lambda1);
  j["T0"] = constant_to_json(rc.T0);
  j["beta"] = constant_to_json(rc.beta);
  j["eta"] = constant_to_json(rc.eta);
  j["gamma_bar"] = constant_to_json(rc.gamma_bar);
  j["Lambda2"] = constant_to_json(rc.Lambda2);
  j["varrho"] = constant_to_json(rc.varrho);
  j["ell"] = constant_to_json(rc.ell);
  j["K_L"] = constant_to_json(rc.K_L);
  j["sigma_bar"] = constant_to_json(rc.sigma_bar);
  return j;
}

inline json validation_to_json(const ValidationReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.conditions) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"worst_violation", c.worst},
                      {"witness", c.witness}});
  }
  return {{"all_pass", rep.all_pass()}, {"conditions", checks}};
}

inline json report_to_json(const SolveReport& r, const json& config,
                           bool include_trace = true) {
  json j;
  j["config"] = config;
  j["iterations"] = r.iterations;
  j["predicted_iterations"] = r.predicted_iterations;
  j["objective"] = r.objective;
  j["sigma_final"] = r.sigma_final;
  j["alpha_final"] = r.alpha_final;
  j["nu"] = r.nu_used;
  j["centering_steps"] = r.centering_steps;
  j["initial_point_adjusted"] = r.initial_point_adjusted;
  j["initial_adjustment"] = r.initial_adjustment;
  j["control"] = {{"N", r.control.N},
                  {"ell", r.control.ell},
                  {"values", detail::mat_to_json(r.control.values)}};
  json g;
  g["lipschitz_max"] = r.residuals.lipschitz_max;
  g["max_proximity"] = r.residuals.max_proximity;
  g["objective_gap"] =
      r.residuals.objective_gap ? json(*r.residuals.objective_gap) : json(nullptr);
  g["l2_distance"] =
      r.residuals.l2_distance ? json(*r.residuals.l2_distance) : json(nullptr);
  j["guarantee_residuals"] = g;
  if (include_trace) {
    json trace = json::array();
    for (const auto& rec : r.trace)
      trace.push_back({{"alpha", rec.alpha}, {"decrement", rec.decrement}, {"sigma", rec.sigma}});
    j["trace"] = trace;
  }
  return j;
}

inline void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << j.dump(2) << "\n";
}

/// Trajectory export: rows of t, x_1..x_n, u_1..u_n at `samples` evenly
/// spaced times including both end points.
inline void write_trajectory_csv(const PiecewiseConstantControl& u, const std::string& path,
                                 int samples = 401) {
  if (samples < 2) throw ConfigError("write_trajectory_csv: need >= 2 samples");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  const int n = u.n();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i) out << ",u" << i;
  out << "\n";
  char buf[32];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (int s = 0; s < samples; ++s) {
    const double t = static_cast<double>(s) / (samples - 1);
    const Vec x = u.trajectory(t);
    const Vec uu = u.at(t);
    emit(t);
    for (int i = 0; i < n; ++i) {
      out << ",";
      emit(x[i]);
    }
    for (int i = 0; i < n; ++i) {
      out << ",";
      emit(uu[i]);
    }
    out << "\n";
  }
}

}  // namespace varipath
