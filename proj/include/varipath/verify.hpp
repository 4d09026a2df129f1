#pragma once

#include "varipath/solver.hpp"

#include <cmath>
#include <functional>

namespace varipath {

/// Closed-form solution of a benchmark instance: trajectory, velocity, and
/// the optimal value. Ground truth for the guarantee checks.
struct ReferenceSolution {
  std::function<Vec(double)> x;
  std::function<Vec(double)> xdot;
  double optimum = 0.0;
  std::string provenance;
};

struct Benchmark {
  VariationalProblem problem;
  ReferenceSolution reference;
};

/// Euler-Lagrange residual of a candidate trajectory: the grid maximum of
/// |d/dt grad_u L(t, x, xdot) - grad_x L(t, x, xdot)|, with the outer time
/// derivative taken by second-order finite differences on the grid.
inline double el_residual(const LagrangianSpec& L, const std::function<Vec(double)>& x,
                          const std::function<Vec(double)>& xdot, int grid_points = 101) {
  if (grid_points < 3) throw ConfigError("el_residual: need at least 3 grid points");
  const double h = 1.0 / (grid_points - 1);
  std::vector<Vec> gu(grid_points), gx(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double t = i * h;
    const LagrangianGrad g = eval_grad(L, t, x(t), xdot(t));
    gu[i] = g.du;
    gx[i] = g.dx;
  }
  double worst = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    Vec ddt;
    if (i == 0) {
      ddt = (-3.0 * gu[0] + 4.0 * gu[1] - gu[2]) / (2.0 * h);
    } else if (i == grid_points - 1) {
      ddt = (3.0 * gu[i] - 4.0 * gu[i - 1] + gu[i - 2]) / (2.0 * h);
    } else {
      ddt = (gu[i + 1] - gu[i - 1]) / (2.0 * h);
    }
    worst = std::max(worst, (ddt - gx[i]).norm());
  }
  return worst;
}

/// The tracking benchmark: L = 1 + u^2/2 + x^2/2, x(0) = 0, x(1) >= B.
/// For B > 0 the constraint binds and the Euler-Lagrange equation xddot = x
/// gives x(t) = B sinh(t)/sinh(1) with value 1 + (B^2/2) coth(1); B = 0 is
/// the slack variant with x = 0 and value 1.
inline Benchmark benchmark_sinh(double B) {
  if (B < 0.0) throw ConfigError("benchmark_sinh: B must be >= 0");
  Benchmark bench;
  VariationalProblem& p = bench.problem;
  p.lagrangian.family = "quad1";
  p.lagrangian.n = 1;
  p.lagrangian.params = Vec(3);
  p.lagrangian.params << 1.0, 1.0, 1.0;
  p.theta.family = "affine_power";
  p.theta.coefficients = Vec(3);
  p.theta.coefficients << 1.0, 0.5, 2.0;
  p.reg = {1.0, 1.0, 0.0};
  p.endpoint.A = Mat(1, 1);
  p.endpoint.A << -1.0;
  p.endpoint.b = Vec(1);
  p.endpoint.b << -B;
  p.a = Vec(1);
  p.a << B;
  p.validate();

  ReferenceSolution& ref = bench.reference;
  if (B == 0.0) {
    ref.x = [](double) { return Vec::Zero(1); };
    ref.xdot = [](double) { return Vec::Zero(1); };
    ref.optimum = 1.0;
    ref.provenance = "slack variant, x = 0";
  } else {
    const double s1 = std::sinh(1.0);
    ref.x = [B, s1](double t) {
      Vec v(1);
      v << B * std::sinh(t) / s1;
      return v;
    };
    ref.xdot = [B, s1](double t) {
      Vec v(1);
      v << B * std::cosh(t) / s1;
      return v;
    };
    ref.optimum = 1.0 + 0.5 * B * B / std::tanh(1.0);
    ref.provenance = "Euler-Lagrange sinh solution";
  }

  // Construction self-checks: admissibility and the necessary condition.
  if (ref.x(0.0).norm() != 0.0) throw Error("benchmark_sinh: x(0) != 0");
  if (!feasible(p.endpoint, ref.x(1.0)))
    throw Error("benchmark_sinh: reference end point infeasible");
  if (el_residual(p.lagrangian, ref.x, ref.xdot, 10001) > 1e-8)
    throw Error("benchmark_sinh: reference violates the Euler-Lagrange equation");
  return bench;
}

/// Transversality margin: the minimum of <grad_u L(1, x(1), xdot(1)), z - x(1)>
/// over the vertices of S intersected with a probe box of radius
/// 10 max(1, |x(1)|). Nonnegative means the end-point condition holds;
/// a negative value is the violation certificate.
inline double transversality_check(const LagrangianSpec& L, const std::function<Vec(double)>& x,
                                   const std::function<Vec(double)>& xdot,
                                   const PolyhedralSet& S) {
  const int n = S.dim();
  if (n > 3) throw ConfigError("transversality_check: vertex enumeration supports n <= 3");
  const Vec x1 = x(1.0);
  const Vec g = eval_grad(L, 1.0, x1, xdot(1.0)).du;
  const double R = 10.0 * std::max(1.0, x1.cwiseAbs().maxCoeff());

  // Stack S with the probe box and enumerate feasible intersections of n rows.
  const int m = S.rows();
  Mat A(m + 2 * n, n);
  Vec b(m + 2 * n);
  A.topRows(m) = S.A;
  b.head(m) = S.b;
  for (int i = 0; i < n; ++i) {
    A.row(m + 2 * i) = Vec::Unit(n, i).transpose();
    b[m + 2 * i] = R;
    A.row(m + 2 * i + 1) = -Vec::Unit(n, i).transpose();
    b[m + 2 * i + 1] = R;
  }
  const int rows = m + 2 * n;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(n);
  std::function<void(int, int)> recurse = [&](int start, int depth) {
    if (depth == n) {
      Mat Asub(n, n);
      Vec bsub(n);
      for (int i = 0; i < n; ++i) {
        Asub.row(i) = A.row(pick[i]);
        bsub[i] = b[pick[i]];
      }
      Eigen::FullPivLU<Mat> lu(Asub);
      if (!lu.isInvertible()) return;
      const Vec z = lu.solve(bsub);
      const Vec slack = b - A * z;
      if (slack.minCoeff() < -1e-9 * (1.0 + R)) return;
      best = std::min(best, g.dot(z - x1));
      return;
    }
    for (int i = start; i < rows; ++i) {
      pick[depth] = i;
      recurse(i + 1, depth + 1);
    }
  };
  recurse(0, 0);
  if (!std::isfinite(best))
    throw Error("transversality_check: no vertex of S within the probe box");
  return best;
}

struct ErrorMetrics {
  double objective_gap = 0.0;  // |P(candidate) - reference optimum|
  double l2_distance = 0.0;    // integral of |x - x_ref|^2 + |u - xdot_ref|^2
  double lipschitz_max = 0.0;  // max_k |u_k|
};

/// The guarantee metrics of a candidate control against a reference solution.
inline ErrorMetrics error_metrics(const PiecewiseConstantControl& u,
                                  const LagrangianSpec& L, const ReferenceSolution& ref,
                                  const QuadratureRule& quad) {
  ErrorMetrics out;
  out.objective_gap = std::abs(objective_P(u, L, quad) - ref.optimum);
  const double tau = u.tau();
  double acc = 0.0;
  for (int k = 0; k < u.N; ++k) {
    for (int q = 0; q < quad.order; ++q) {
      const double t = (k + quad.nodes[q]) * tau;
      const Vec dx = u.trajectory(t) - ref.x(t);
      const Vec du = u.values.row(k).transpose() - ref.xdot(t);
      acc += quad.weights[q] * tau * (dx.squaredNorm() + du.squaredNorm());
    }
  }
  out.l2_distance = acc;
  for (int k = 0; k < u.N; ++k)
    out.lipschitz_max = std::max(out.lipschitz_max, u.values.row(k).norm());
  return out;
}

// ---------------------------------------------------------------------------
// Independent discretized-optimum oracle.
// ---------------------------------------------------------------------------

struct DiscretizedOptimum {
  double value = 0.0;
  PiecewiseConstantControl control;
  std::vector<int> active_rows;
};

/// Minimizes the discretized objective subject to A x(1) <= b by active-set
/// Newton on the equality-constrained subproblems (range-space KKT solves).
/// This path shares nothing with the barrier method, so it serves as the
/// independent route for consistency checks. The box is assumed inactive and
/// verified after the fact.
inline DiscretizedOptimum discretized_optimum(const VariationalProblem& prob, int N,
                                              const QuadratureRule& quad,
                                              double box_radius = 0.0) {
  prob.validate();
  const int n = prob.n(), m = prob.m();
  const int dim = n * N;
  const double tau = 1.0 / N;

  std::vector<int> active;
  Vec u = Vec::Zero(dim);

  auto constraint_row = [&](int i) {
    // d/du of <A_i, tau * sum_k u_k>: the same n-vector per interval block.
    Vec row(dim);
    for (int k = 0; k < N; ++k)
      row.segment(k * n, n) = tau * prob.endpoint.A.row(i).transpose();
    return row;
  };

  auto solve_equality = [&](const std::vector<int>& W, Vec& u_io, Vec& lambda_out) {
    const int nw = static_cast<int>(W.size());
    Mat C(nw, dim);
    Vec d(nw);
    for (int i = 0; i < nw; ++i) {
      C.row(i) = constraint_row(W[i]).transpose();
      d[i] = prob.endpoint.b[W[i]];
    }
    if (nw > 0) {
      // Feasible start for the equalities: constant control with the
      // least-norm end point satisfying the active rows.
      Mat Aw(nw, n);
      Vec bw(nw);
      for (int i = 0; i < nw; ++i) {
        Aw.row(i) = prob.endpoint.A.row(W[i]);
        bw[i] = prob.endpoint.b[W[i]];
      }
      const Vec z = Aw.completeOrthogonalDecomposition().solve(bw);
      for (int k = 0; k < N; ++k) u_io.segment(k * n, n) = z;
    }
    lambda_out = Vec::Zero(nw);
    bool converged = false;
    for (int it = 0; it < 100 && !converged; ++it) {
      PiecewiseConstantControl uc = PiecewiseConstantControl::from_flat(u_io, N, n, 0.0);
      const ObjectiveEval E = objective_eval(uc, prob.lagrangian, quad, true, true);
      Eigen::LLT<Mat> llt(E.hess);
      if (llt.info() != Eigen::Success) {
        Mat shifted = E.hess;
        shifted.diagonal().array() += 1e-12 * E.hess.trace() / dim;
        llt.compute(shifted);
        if (llt.info() != Eigen::Success)
          throw Error("discretized_optimum: objective Hessian not positive definite");
      }
      const Vec d0 = llt.solve(-E.grad);
      Vec step;
      if (nw == 0) {
        step = d0;
      } else {
        const Mat Y = llt.solve(C.transpose());
        const Mat Schur = C * Y;
        const Vec resid = d - C * u_io;
        lambda_out = Schur.ldlt().solve(C * d0 - resid);
        step = d0 - Y * lambda_out;
      }
      const double dec = std::sqrt(std::max(0.0, step.dot(E.hess * step)));
      // Full steps are exact for quadratic families; damp large steps so the
      // quartic family converges as well.
      u_io += (dec > 1.0 ? 1.0 / (1.0 + dec) : 1.0) * step;
      converged = dec < 1e-11 * (1.0 + std::abs(E.value));
    }
    if (!converged)
      throw IterationCapError("discretized_optimum: Newton did not converge on the "
                              "equality-constrained subproblem");
  };

  for (int round = 0; round < 2 * m + 4; ++round) {
    Vec lambda;
    solve_equality(active, u, lambda);
    const Vec endpoint =
        tau * [&] {
          Vec s = Vec::Zero(n);
          for (int k = 0; k < N; ++k) s += u.segment(k * n, n);
          return s;
        }();
    const Vec slack = prob.endpoint.b - prob.endpoint.A * endpoint;

    // Drop the most negative multiplier, else add the most violated row.
    int drop = -1;
    double worst_lambda = -1e-9;
    for (int i = 0; i < static_cast<int>(active.size()); ++i)
      if (lambda[i] < worst_lambda) {
        worst_lambda = lambda[i];
        drop = i;
      }
    if (drop >= 0) {
      active.erase(active.begin() + drop);
      continue;
    }
    int add = -1;
    double worst_violation = -1e-10 * (1.0 + prob.endpoint.b.cwiseAbs().maxCoeff());
    for (int i = 0; i < m; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      if (slack[i] < worst_violation) {
        worst_violation = slack[i];
        add = i;
      }
    }
    if (add < 0) {
      DiscretizedOptimum out;
      out.control = PiecewiseConstantControl::from_flat(u, N, n, box_radius);
      if (box_radius > 0.0 && out.control.values.cwiseAbs().maxCoeff() > box_radius)
        throw Error("discretized_optimum: box constraint active; oracle not applicable");
      out.value = objective_P(out.control, prob.lagrangian, quad);
      out.active_rows = active;
      return out;
    }
    active.push_back(add);
  }
  throw IterationCapError("discretized_optimum: active-set loop did not settle");
}

}  // namespace varipath
