// Command-line front end: estimate the constants chain, solve an instance
// with the barrier path-following method, or run the benchmark verification
// suite. Reports are JSON (with the configuration embedded), trajectories
// are CSV. Exit codes: 0 success, 1 malformed configuration, 2 infeasible,
// 3 iteration cap exceeded, 4 condition validation failed.

#include "varipath/varipath.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace varipath;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitIterationCap = 3;
constexpr int kExitValidation = 4;

struct CommonOptions {
  std::string problem_path;
  std::string out_path;
  std::uint64_t seed = 12345;
};

json estimator_config_json(const EstimatorOptions& opts) {
  json j;
  j["omega_grid"] = opts.omega_grid;
  j["u_grid"] = opts.u_grid;
  j["safety"] = opts.safety;
  j["t0_points"] = opts.t0_points;
  j["t0_min"] = opts.t0_min;
  j["t0_max"] = opts.t0_max;
  j["use_analytic"] = opts.use_analytic;
  j["c_quad_order"] = opts.c_quad_order;
  j["c_quad_panels"] = opts.c_quad_panels;
  return j;
}

int run_estimate(const CommonOptions& common, const EstimatorOptions& opts,
                 bool skip_validation, int samples, double sample_radius) {
  const VariationalProblem prob = load_problem(common.problem_path);
  ValidationReport validation;
  if (!skip_validation) {
    validation = validate_conditions(prob, samples, sample_radius, common.seed);
    if (!validation.all_pass()) {
      std::cerr << "condition validation failed; the constants chain assumes the "
                   "declared regularity (re-run with --skip-validation to proceed)\n";
      for (const auto& c : validation.conditions)
        if (!c.pass)
          std::cerr << "  " << c.name << " worst=" << c.worst << " at " << c.witness << "\n";
      return kExitValidation;
    }
  }
  const RegularityConstants rc = compute_all(prob, opts);
  json report;
  report["config"] = {{"subcommand", "estimate"},
                      {"problem", common.problem_path},
                      {"seed", common.seed},
                      {"skip_validation", skip_validation},
                      {"samples", samples},
                      {"estimator", estimator_config_json(opts)}};
  report["problem"] = problem_to_json(prob);
  report["constants"] = constants_to_json(rc);
  if (!skip_validation) report["validation"] = validation_to_json(validation);
  if (!common.out_path.empty()) write_json(report, common.out_path);
  std::cout << report["constants"].dump(2) << std::endl;
  return kExitOk;
}

struct SolveOptions {
  double epsilon = 0.1;
  double kappa = 0.25;
  double gamma = -1.0;  // -1: bound value for kappa
  long long N_override = 0;
  double nu_override = 0.0;
  long long max_iters = -1;
  int quad_order = 5;
  int samples = 200;
  double sample_radius = 10.0;
  bool skip_validation = false;
  bool literal_endpoint_sum = false;
  std::string trajectory_path;
  int trajectory_samples = 401;
  bool no_trace = false;
};

int run_solve(const CommonOptions& common, const SolveOptions& so,
              const EstimatorOptions& eo) {
  const VariationalProblem prob = load_problem(common.problem_path);

  ValidationReport validation;
  if (!so.skip_validation) {
    validation = validate_conditions(prob, so.samples, so.sample_radius, common.seed);
    if (!validation.all_pass()) {
      std::cerr << "condition validation failed:\n";
      for (const auto& c : validation.conditions)
        if (!c.pass)
          std::cerr << "  " << c.name << " worst=" << c.worst << " at " << c.witness << "\n";
      std::cerr << "(re-run with --skip-validation to proceed anyway)\n";
      return kExitValidation;
    }
  }

  const RegularityConstants rc = compute_all(prob, eo);

  SolverConfig cfg;
  cfg.epsilon = so.epsilon;
  cfg.kappa = so.kappa;
  cfg.gamma = so.gamma > 0.0 ? so.gamma : SolverConfig::gamma_bound(so.kappa);
  if (so.nu_override > 0.0) cfg.nu = so.nu_override;
  cfg.max_iters = so.max_iters;

  long long N = so.N_override;
  if (N <= 0) {
    N = required_N(cfg.epsilon, rc.ell.value, rc.K_L.value);
    std::cerr << "grid size from the accuracy rule: N = " << N << "\n";
  }
  const long long dim = static_cast<long long>(prob.n()) * N + 1;
  if (dim > 8192)
    throw ConfigError("solve: nN+1 = " + std::to_string(dim) +
                      " exceeds the dense-solver budget (8192); pass --N to override the grid");

  DiscretizedProgram prog;
  prog.problem = prob;
  prog.quad = QuadratureRule::gauss_legendre(so.quad_order);
  prog.N = static_cast<int>(N);
  prog.ell = rc.ell.value;
  prog.sigma_bar = rc.sigma_bar.value;
  prog.literal_endpoint_sum = so.literal_endpoint_sum;

  const SolveReport rep = path_follow(prog, cfg);

  json config;
  config["subcommand"] = "solve";
  config["problem"] = common.problem_path;
  config["seed"] = common.seed;
  config["epsilon"] = cfg.epsilon;
  config["kappa"] = cfg.kappa;
  config["gamma"] = cfg.gamma;
  config["N"] = N;
  config["nu"] = rep.nu_used;
  config["quad_order"] = so.quad_order;
  config["skip_validation"] = so.skip_validation;
  config["literal_endpoint_sum"] = so.literal_endpoint_sum;
  config["samples"] = so.samples;
  config["estimator"] = estimator_config_json(eo);

  json report = report_to_json(rep, config, !so.no_trace);
  report["constants"] = constants_to_json(rc);
  if (!so.skip_validation) report["validation"] = validation_to_json(validation);
  if (!common.out_path.empty()) write_json(report, common.out_path);
  if (!so.trajectory_path.empty())
    write_trajectory_csv(rep.control, so.trajectory_path, so.trajectory_samples);

  std::cout << "objective " << rep.objective << " after " << rep.iterations
            << " iterations (bound " << rep.predicted_iterations << "), sigma "
            << rep.sigma_final << ", max |u_k| " << rep.residuals.lipschitz_max
            << " <= ell " << prog.ell << "\n";
  return kExitOk;
}

struct VerifyOptions {
  double epsilon = 0.1;
  int N = 64;
  double B = 1.0;
  int fine_N = 1024;
  int quad_order = 5;
};

int run_verify(const CommonOptions& common, const VerifyOptions& vo,
               const EstimatorOptions& eo) {
  const Benchmark bench = benchmark_sinh(vo.B);
  const RegularityConstants rc = compute_all(bench.problem, eo);
  const QuadratureRule quad = QuadratureRule::gauss_legendre(vo.quad_order);

  SolverConfig cfg;
  cfg.epsilon = vo.epsilon;

  DiscretizedProgram prog;
  prog.problem = bench.problem;
  prog.quad = quad;
  prog.N = vo.N;
  prog.ell = rc.ell.value;
  prog.sigma_bar = rc.sigma_bar.value;

  SolveReport rep = path_follow(prog, cfg);
  const ErrorMetrics metrics =
      error_metrics(rep.control, bench.problem.lagrangian, bench.reference, quad);
  rep.residuals.objective_gap = metrics.objective_gap;
  rep.residuals.l2_distance = metrics.l2_distance;

  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, double measured, double bound, bool pass) {
    checks.push_back(
        {{"name", name}, {"measured", measured}, {"bound", bound}, {"pass", pass}});
    all = all && pass;
    std::cout << (pass ? "[pass] " : "[FAIL] ") << name << ": measured " << measured
              << " vs bound " << bound << "\n";
  };

  check("objective gap |P - optimum| < epsilon", metrics.objective_gap, vo.epsilon,
        metrics.objective_gap < vo.epsilon);
  check("L2 distance <= (2/mu) epsilon", metrics.l2_distance,
        2.0 / bench.problem.reg.mu * vo.epsilon,
        metrics.l2_distance <= 2.0 / bench.problem.reg.mu * vo.epsilon);
  check("iterations <= predicted", static_cast<double>(rep.iterations),
        static_cast<double>(rep.predicted_iterations),
        rep.iterations <= rep.predicted_iterations);
  check("max |u_k| <= ell", metrics.lipschitz_max, rc.ell.value,
        metrics.lipschitz_max <= rc.ell.value);
  const double ref_vmax = bench.reference.xdot(1.0).norm();
  check("reference max velocity <= ell", ref_vmax, rc.ell.value, ref_vmax <= rc.ell.value);
  const double el_res =
      el_residual(bench.problem.lagrangian, bench.reference.x, bench.reference.xdot, 101);
  check("Euler-Lagrange residual of reference < 1e-4", el_res, 1e-4, el_res < 1e-4);
  const double tv = transversality_check(bench.problem.lagrangian, bench.reference.x,
                                         bench.reference.xdot, bench.problem.endpoint);
  check("transversality margin >= 0", tv, 0.0, tv >= -1e-12);
  if (vo.fine_N > 0) {
    const DiscretizedOptimum fine =
        discretized_optimum(bench.problem, vo.fine_N, quad, rc.ell.value);
    const double gap = std::abs(fine.value - bench.reference.optimum);
    check("fine-grid optimum within 1e-3 of closed form", gap, 1e-3, gap <= 1e-3);
  }

  json report;
  report["config"] = {{"subcommand", "verify"}, {"epsilon", vo.epsilon},
                      {"N", vo.N},             {"B", vo.B},
                      {"fine_N", vo.fine_N},   {"seed", common.seed},
                      {"quad_order", vo.quad_order}};
  report["constants"] = constants_to_json(rc);
  report["solve"] = report_to_json(rep, report["config"], false);
  report["checks"] = checks;
  report["all_pass"] = all;
  if (!common.out_path.empty()) write_json(report, common.out_path);
  std::cout << (all ? "all guarantees hold" : "GUARANTEE FAILURE") << std::endl;
  return all ? kExitOk : kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"varipath: Lipschitz-bound estimation, barrier path-following, and "
               "guarantee verification for convex variational problems with "
               "polyhedral end-point constraints"};
  app.require_subcommand(1);

  CommonOptions common;
  EstimatorOptions eo;
  SolveOptions so;
  VerifyOptions vo;

  auto add_estimator_flags = [&](CLI::App* cmd) {
    cmd->add_option("--grid", eo.omega_grid, "grid points per axis for Omega scans");
    cmd->add_option("--u-grid", eo.u_grid, "grid points per axis for u domains");
    cmd->add_option("--safety", eo.safety, "grid-max inflation factor");
    cmd->add_option("--t0-points", eo.t0_points, "T0 candidates");
    cmd->add_flag("--no-analytic", [&eo](std::int64_t) { eo.use_analytic = false; },
                  "force grid maximization even when closed forms exist");
  };

  CLI::App* est = app.add_subcommand("estimate", "compute the constants chain");
  est->add_option("--problem", common.problem_path, "problem JSON")->required();
  est->add_option("--out", common.out_path, "derivation report JSON");
  est->add_option("--seed", common.seed, "seed for sampled validations");
  est->add_option("--samples", so.samples, "validation sample count");
  est->add_option("--sample-radius", so.sample_radius, "validation sample radius");
  est->add_flag("--skip-validation", so.skip_validation, "skip condition validation");
  add_estimator_flags(est);

  CLI::App* sol = app.add_subcommand("solve", "run the path-following method");
  sol->add_option("--problem", common.problem_path, "problem JSON")->required();
  sol->add_option("--epsilon", so.epsilon, "accuracy");
  sol->add_option("--kappa", so.kappa, "neighborhood parameter");
  sol->add_option("--gamma", so.gamma, "step parameter (default: bound for kappa)");
  sol->add_option("--N", so.N_override, "grid size override (default: accuracy rule)");
  sol->add_option("--nu", so.nu_override, "barrier parameter override");
  sol->add_option("--max-iters", so.max_iters, "iteration cap (default 10x bound)");
  sol->add_option("--out", common.out_path, "solve report JSON");
  sol->add_option("--trajectory", so.trajectory_path, "trajectory CSV");
  sol->add_option("--trajectory-samples", so.trajectory_samples, "CSV sampling density");
  sol->add_option("--quad-order", so.quad_order, "per-interval quadrature order");
  sol->add_option("--samples", so.samples, "validation sample count");
  sol->add_option("--sample-radius", so.sample_radius, "validation sample radius");
  sol->add_option("--seed", common.seed, "seed for sampled validations");
  sol->add_flag("--skip-validation", so.skip_validation, "skip condition validation");
  sol->add_flag("--literal-endpoint-sum", so.literal_endpoint_sum,
                "polyhedral term uses the unscaled control sum");
  sol->add_flag("--no-trace", so.no_trace, "omit the per-iteration trace from the report");
  add_estimator_flags(sol);

  CLI::App* ver = app.add_subcommand("verify", "run the benchmark guarantee suite");
  ver->add_option("--epsilon", vo.epsilon, "accuracy");
  ver->add_option("--N", vo.N, "grid size for the solve");
  ver->add_option("--B", vo.B, "benchmark end-point bound x(1) >= B");
  ver->add_option("--fine-N", vo.fine_N, "fine-grid consistency size (0 skips)");
  ver->add_option("--quad-order", vo.quad_order, "quadrature order");
  ver->add_option("--out", common.out_path, "summary JSON");
  ver->add_option("--seed", common.seed, "seed");
  add_estimator_flags(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (est->parsed())
      return run_estimate(common, eo, so.skip_validation, so.samples, so.sample_radius);
    if (sol->parsed()) return run_solve(common, so, eo);
    if (ver->parsed()) return run_verify(common, vo, eo);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const IterationCapError& e) {
    std::cerr << "iteration cap: " << e.what() << "\n";
    return kExitIterationCap;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
