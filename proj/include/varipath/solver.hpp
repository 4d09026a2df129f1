#pragma once

#include "varipath/barrier.hpp"

#include <cmath>
#include <optional>

namespace varipath {

/// Parameters of the path-following method. The defaults kappa = 1/4 and
/// gamma = sqrt(kappa)/(1+sqrt(kappa)) - kappa = 1/12 satisfy the step-size
/// constraint with equality and keep 1 - 2 kappa > 0 for the iteration bound.
struct SolverConfig {
  double kappa = 0.25;
  double gamma = 1.0 / 12.0;
  double epsilon = 0.1;
  std::optional<double> nu;      // barrier parameter in stop rule / bound; default m + nN + 1
  long long max_iters = -1;      // -1: 10 x predicted iterations
  double centering_tol = -1.0;   // -1: kappa
  long long max_center_iters = 2000;

  static double gamma_bound(double kappa) {
    return std::sqrt(kappa) / (1.0 + std::sqrt(kappa)) - kappa;
  }

  void validate() const {
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("SolverConfig: kappa must be in (0,1)");
    if (!(gamma > 0.0)) throw ConfigError("SolverConfig: gamma must be > 0");
    if (gamma > gamma_bound(kappa) + 1e-15)
      throw ConfigError("SolverConfig: gamma must satisfy gamma <= sqrt(kappa)/(1+sqrt(kappa)) - kappa");
    if (!(epsilon > 0.0)) throw ConfigError("SolverConfig: epsilon must be > 0");
    if (nu && !(*nu > 0.0)) throw ConfigError("SolverConfig: nu must be > 0");
  }

  double effective_centering_tol() const { return centering_tol > 0.0 ? centering_tol : kappa; }
};

struct IterationRecord {
  double alpha = 0.0;
  double decrement = 0.0;  // local norm of alpha v + grad at the iterate
  double sigma = 0.0;
};

struct GuaranteeResiduals {
  std::optional<double> objective_gap;  // vs reference optimum, when known
  std::optional<double> l2_distance;    // vs reference trajectory, when known
  double lipschitz_max = 0.0;           // max_k |u_k|
  double max_proximity = 0.0;           // worst centering residual seen on the path
};

struct SolveReport {
  long long iterations = 0;
  long long predicted_iterations = 0;
  double objective = 0.0;
  PiecewiseConstantControl control;
  double sigma_final = 0.0;
  double alpha_final = 0.0;
  GuaranteeResiduals residuals;
  std::vector<IterationRecord> trace;
  long long centering_steps = 0;
  bool initial_point_adjusted = false;
  double initial_adjustment = 0.0;
  double nu_used = 0.0;
};

/// A-priori bound on the number of path-following iterations, evaluated with
/// nu = m + nN + 1 (or the configured override) and the sigma_bar/sqrt(2)
/// estimate of the objective-direction norm at the analytic center.
inline long long predicted_iterations(int m, int n, long long N, double epsilon,
                                      const SolverConfig& cfg, double sigma_bar) {
  cfg.validate();
  if (!(epsilon > 0.0)) throw ConfigError("predicted_iterations: epsilon must be > 0");
  if (!(cfg.kappa < 0.5))
    throw ConfigError("predicted_iterations: kappa must be < 1/2 (the bound needs 1 - 2 kappa > 0)");
  const double nu = cfg.nu ? *cfg.nu : static_cast<double>(m) + static_cast<double>(n) * N + 1.0;
  const double root = std::sqrt(nu);
  const double numerator =
      std::sqrt(2.0) * ((1.0 + cfg.kappa) * nu + (cfg.kappa + root) * cfg.kappa) * sigma_bar /
      (cfg.gamma * (1.0 - 2.0 * cfg.kappa) * epsilon);
  const double expr = std::log(numerator) / std::log1p(cfg.gamma / (cfg.kappa + root)) + 1.0;
  if (!(expr > 0.0)) return 1;
  if (expr >= 9e18) throw RangeError("predicted_iterations: bound exceeds representable range");
  return static_cast<long long>(std::ceil(expr));
}

namespace detail {

/// Strictly interior end point of S intersected with the reachable box,
/// starting from the reference point a and nudging along the interior
/// direction suggested by the active rows until the margins clear.
struct InteriorPoint {
  Vec z;
  bool adjusted = false;
  double shift = 0.0;
};

inline bool interior_ok(const PolyhedralSet& S, const Vec& z, double ell) {
  const Vec slack = S.b - S.A * z;
  for (int i = 0; i < slack.size(); ++i)
    if (!(slack[i] >= 1e-6 * std::max(1.0, std::abs(S.b[i])))) return false;
  return z.cwiseAbs().maxCoeff() <= ell * (1.0 - 1e-3);
}

inline InteriorPoint find_interior_endpoint(const VariationalProblem& prob, double ell) {
  const PolyhedralSet& S = prob.endpoint;
  if (interior_ok(S, prob.a, ell)) return {prob.a, false, 0.0};
  // Push against the near-active constraint normals.
  Vec dir = Vec::Zero(S.dim());
  const Vec slack = S.b - S.A * prob.a;
  for (int i = 0; i < S.rows(); ++i) {
    const double weight = 1.0 / std::max(slack[i], 1e-9 * std::max(1.0, std::abs(S.b[i])));
    dir -= weight * S.A.row(i).transpose();
  }
  if (dir.norm() > 0.0) {
    dir.normalize();
    const double scale = std::max(1.0, prob.a.cwiseAbs().maxCoeff());
    for (double s : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      const Vec z = prob.a + (s * scale) * dir;
      if (interior_ok(S, z, ell)) return {z, true, s * scale};
    }
  }
  const Vec origin = Vec::Zero(S.dim());
  if (interior_ok(S, origin, ell)) return {origin, true, prob.a.norm()};
  throw InfeasibleError("initial_point: no strictly feasible end point found (phase-I failure)");
}

}  // namespace detail

struct InitialPoint {
  BarrierPoint point;
  bool adjusted = false;
  double adjustment = 0.0;
};

/// Starting point: the constant control steering along t -> t z for a
/// strictly interior end point z (the reference point a, adjusted inward if
/// it sits on the boundary), with sigma midway between P(u0) and sigma_bar.
inline InitialPoint initial_point(const DiscretizedProgram& prog) {
  prog.validate();
  const detail::InteriorPoint ip = detail::find_interior_endpoint(prog.problem, prog.ell);
  const int n = prog.n();
  Vec u0(prog.N * n);
  for (int k = 0; k < prog.N; ++k) u0.segment(k * n, n) = ip.z;
  const double P0 = objective_P(prog.control_of(u0), prog.problem.lagrangian, prog.quad);
  if (!(P0 < prog.sigma_bar))
    throw InfeasibleError("initial_point: P(u0) >= sigma_bar; the cap does not dominate "
                          "the objective at the starting control");
  InitialPoint out;
  out.point.u = u0;
  out.point.sigma = 0.5 * (P0 + prog.sigma_bar);
  out.adjusted = ip.adjusted;
  out.adjustment = ip.shift;
  barrier_eval(prog, out.point, false);  // domain check
  return out;
}

struct CenterResult {
  BarrierPoint point;
  long long steps = 0;
  std::vector<double> decrements;
};

/// Damped Newton on the barrier alone until the Newton decrement drops to
/// the centering tolerance (default kappa), establishing the initialization
/// condition of the path-following method.
inline CenterResult center(const DiscretizedProgram& prog, const BarrierPoint& start,
                           const SolverConfig& cfg = {}) {
  cfg.validate();
  const double tol = cfg.effective_centering_tol();
  CenterResult res;
  res.point = start;
  for (long long it = 0; it <= cfg.max_center_iters; ++it) {
    const FactoredBarrier F(prog, res.point);
    const Vec dir = -F.solve(F.eval.grad);
    const double lambda = std::sqrt(std::max(0.0, -dir.dot(F.eval.grad)));
    res.decrements.push_back(lambda);
    if (lambda <= tol) return res;
    if (it == cfg.max_center_iters) break;
    // Damped step 1/(1+lambda) keeps the iterate strictly feasible; halve on
    // the rare roundoff-induced boundary hit.
    double scale = 1.0 / (1.0 + lambda);
    for (int tries = 0; tries < 60; ++tries) {
      const Vec z = res.point.stacked() + scale * dir;
      try {
        BarrierPoint cand = BarrierPoint::from_stacked(z);
        barrier_eval(prog, cand, false);
        res.point = cand;
        break;
      } catch (const DomainViolation&) {
        scale *= 0.5;
        if (tries == 59) throw;
      }
    }
    ++res.steps;
  }
  throw IterationCapError("center: damped Newton did not reach the centering tolerance in " +
                          std::to_string(cfg.max_center_iters) + " steps");
}

/// The path-following method: from a centered point, grow alpha by
/// gamma / ||v||^F each step, take one Newton step on F + alpha sigma, and
/// stop once nu + (kappa + sqrt(nu)) kappa / (1 - kappa) <= epsilon alpha.
/// On termination the control's objective is within epsilon of the
/// discretized optimum.
inline SolveReport path_follow(const DiscretizedProgram& prog, const SolverConfig& cfg = {}) {
  prog.validate();
  cfg.validate();
  const int D = prog.dim();

  SolveReport report;
  report.nu_used = cfg.nu ? *cfg.nu : static_cast<double>(prog.m()) + static_cast<double>(prog.n()) * prog.N + 1.0;
  report.predicted_iterations =
      predicted_iterations(prog.m(), prog.n(), prog.N, cfg.epsilon, cfg, prog.sigma_bar);
  const long long cap =
      cfg.max_iters > 0 ? cfg.max_iters : 10 * std::max<long long>(report.predicted_iterations, 1);

  const InitialPoint init = initial_point(prog);
  report.initial_point_adjusted = init.adjusted;
  report.initial_adjustment = init.adjustment;
  const CenterResult centered = center(prog, init.point, cfg);
  report.centering_steps = centered.steps;

  BarrierPoint z = centered.point;
  Vec v = Vec::Zero(D);
  v[D - 1] = 1.0;

  const double nu = report.nu_used;
  const double stop_lhs =
      nu + (cfg.kappa + std::sqrt(nu)) * cfg.kappa / (1.0 - cfg.kappa);

  double alpha = 0.0;
  long long k = 0;
  report.trace.reserve(1024);
  while (true) {
    const FactoredBarrier F(prog, z);
    Vec residual = F.eval.grad;
    residual[D - 1] += alpha;
    const double proximity = F.inv_norm(residual);
    report.residuals.max_proximity = std::max(report.residuals.max_proximity, proximity);
    report.trace.push_back({alpha, proximity, z.sigma});
    if (proximity > cfg.kappa + 0.02)
      throw Error("path_follow: iterate left the kappa-neighborhood of the central path "
                  "(proximity " + std::to_string(proximity) + "); gamma/kappa misconfigured");

    if (stop_lhs <= cfg.epsilon * alpha) break;
    if (k >= cap)
      throw IterationCapError("path_follow: iteration cap " + std::to_string(cap) +
                              " exceeded at alpha = " + std::to_string(alpha));

    const double vnorm = F.inv_norm(v);
    alpha += cfg.gamma / vnorm;
    Vec rhs = F.eval.grad;
    rhs[D - 1] += alpha;
    const Vec step = -F.solve(rhs);
    z = BarrierPoint::from_stacked(Vec(z.stacked() + step));
    ++k;
  }

  report.iterations = k;
  report.alpha_final = alpha;
  report.sigma_final = z.sigma;
  report.control = prog.control_of(z.u);
  report.control.ell = prog.ell;
  report.objective = objective_P(report.control, prog.problem.lagrangian, prog.quad);
  double lip = 0.0;
  for (int kk = 0; kk < prog.N; ++kk)
    lip = std::max(lip, report.control.values.row(kk).norm());
  report.residuals.lipschitz_max = lip;
  return report;
}

}  // namespace varipath
