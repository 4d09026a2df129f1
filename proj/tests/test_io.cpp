#include "varipath/io.hpp"

#include "varipath/verify.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace varipath;

namespace {

json benchmark_json() {
  return json::parse(R"({
    "n": 1,
    "family": "quad1",
    "params": [1.0, 1.0, 1.0],
    "theta": {"family": "affine_power", "coefficients": [1.0, 0.5, 2.0]},
    "mu": 1.0,
    "xi": 1.0,
    "delta": 0.0,
    "A": [[-1.0]],
    "b": [-1.0],
    "a": [1.0]
  })");
}

}  // namespace

TEST(Io, ProblemFromJson) {
  const VariationalProblem p = problem_from_json(benchmark_json());
  EXPECT_EQ(p.lagrangian.family, "quad1");
  EXPECT_EQ(p.n(), 1);
  EXPECT_DOUBLE_EQ(p.reg.mu, 1.0);
  EXPECT_DOUBLE_EQ(p.endpoint.A(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(p.a[0], 1.0);
  EXPECT_DOUBLE_EQ(p.theta(2.0), 3.0);
}

TEST(Io, ProblemJsonRoundTrip) {
  const VariationalProblem p = problem_from_json(benchmark_json());
  const VariationalProblem q = problem_from_json(problem_to_json(p));
  EXPECT_EQ(problem_to_json(p).dump(), problem_to_json(q).dump());
}

TEST(Io, ReferencePointDefaultsToOrigin) {
  json j = benchmark_json();
  j.erase("a");
  // S = {x >= 1} does not contain the origin: the default is rejected.
  EXPECT_THROW(problem_from_json(j), ConfigError);
  j["b"] = json::parse("[5.0]");  // S = {x >= -5} contains it
  const VariationalProblem p = problem_from_json(j);
  EXPECT_DOUBLE_EQ(p.a[0], 0.0);
}

TEST(Io, ProblemJsonErrors) {
  json missing = benchmark_json();
  missing.erase("mu");
  EXPECT_THROW(problem_from_json(missing), ConfigError);

  json ragged = benchmark_json();
  ragged["A"] = json::parse("[[1.0, 2.0], [3.0]]");
  EXPECT_THROW(problem_from_json(ragged), ConfigError);

  json bad_theta = benchmark_json();
  bad_theta["theta"]["coefficients"] = json::parse("[1.0, \"x\", 2.0]");
  EXPECT_THROW(problem_from_json(bad_theta), std::exception);

  EXPECT_THROW(load_problem("/nonexistent/path.json"), ConfigError);
}

TEST(Io, ConstantsJsonCarriesProvenance) {
  const Benchmark bench = benchmark_sinh(1.0);
  const auto rc = compute_all(bench.problem);
  const json j = constants_to_json(rc);
  for (const char* key : {"r0", "c", "Lambda0", "Lambda1", "T0", "beta", "eta",
                          "gamma_bar", "Lambda2", "varrho", "ell", "K_L", "sigma_bar"}) {
    ASSERT_TRUE(j.contains(key)) << key;
    EXPECT_TRUE(j.at(key).contains("value"));
    EXPECT_TRUE(j.at(key).contains("provenance"));
  }
  EXPECT_EQ(j.at("Lambda0").at("provenance").get<std::string>(), "analytic(quad1)");
}

TEST(Io, SolveReportJsonIsDeterministic) {
  const Benchmark bench = benchmark_sinh(1.0);
  const auto rc = compute_all(bench.problem);
  DiscretizedProgram prog;
  prog.problem = bench.problem;
  prog.N = 8;
  prog.ell = rc.ell.value;
  prog.sigma_bar = rc.sigma_bar.value;
  SolverConfig cfg;
  cfg.epsilon = 0.5;
  const json cfg_json = {{"epsilon", cfg.epsilon}, {"seed", 1}};
  const std::string a = report_to_json(path_follow(prog, cfg), cfg_json).dump();
  const std::string b = report_to_json(path_follow(prog, cfg), cfg_json).dump();
  EXPECT_EQ(a, b);
  // The config is embedded for the audit trail.
  EXPECT_NE(a.find("\"config\""), std::string::npos);
  EXPECT_NE(a.find("\"trace\""), std::string::npos);
}

TEST(Io, TrajectoryCsv) {
  PiecewiseConstantControl u;
  u.N = 4;
  u.values = Mat(4, 1);
  u.values << 1.0, 0.5, -0.5, 2.0;
  const std::string path = "test_trajectory.csv";
  write_trajectory_csv(u, path, 9);
  std::ifstream in(path);
  ASSERT_TRUE(in.good());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,x1,u1");
  int rows = 0;
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      ++rows;
      last = line;
    }
  }
  EXPECT_EQ(rows, 9);
  EXPECT_EQ(last.substr(0, 2), "1,");
  std::remove(path.c_str());
}

TEST(Io, ValidationJsonShape) {
  const Benchmark bench = benchmark_sinh(1.0);
  const auto rep = validate_conditions(bench.problem, 50, 5.0);
  const json j = validation_to_json(rep);
  EXPECT_TRUE(j.at("all_pass").get<bool>());
  EXPECT_EQ(j.at("conditions").size(), 4u);
}

TEST(Io, ThreadBudgetFromEnvironment) {
  setenv("VARIPATH_THREADS", "3", 1);
  EXPECT_EQ(thread_count(), 3);
  setenv("VARIPATH_THREADS", "0", 1);
  EXPECT_GE(thread_count(), 1);
  // The chunked max-reduction agrees with the sequential scan.
  setenv("VARIPATH_THREADS", "4", 1);
  auto f = [](long long i) { return std::sin(0.001 * i) * std::cos(0.017 * i); };
  const double par = parallel_max(20000, f);
  setenv("VARIPATH_THREADS", "1", 1);
  const double seq = parallel_max(20000, f);
  EXPECT_EQ(par, seq);
  unsetenv("VARIPATH_THREADS");
}
