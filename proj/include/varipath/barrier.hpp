#pragma once

#include "varipath/discretize.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace varipath {

/// The finite-dimensional program the path-following method runs on:
/// minimize sigma over (u, sigma) subject to P(u) <= sigma <= sigma_bar,
/// A x(1) <= b and the per-coordinate box |u_k^(i)| <= ell.
struct DiscretizedProgram {
  VariationalProblem problem;
  QuadratureRule quad = QuadratureRule::gauss_legendre(5);
  int N = 0;
  double ell = 0.0;
  double sigma_bar = 0.0;
  /// When set, the polyhedral slack uses the literal sum of control values
  /// (no tau factor) instead of the end point x(1) = tau * sum_k u_k.
  bool literal_endpoint_sum = false;

  int n() const { return problem.n(); }
  int m() const { return problem.m(); }
  int dim() const { return n() * N + 1; }
  double tau() const { return 1.0 / N; }
  double endpoint_factor() const { return literal_endpoint_sum ? 1.0 : tau(); }

  void validate() const {
    problem.validate();
    if (N < 1) throw ConfigError("DiscretizedProgram: N must be >= 1");
    if (!(ell > 0.0)) throw ConfigError("DiscretizedProgram: ell must be > 0");
    if (!(sigma_bar > 0.0)) throw ConfigError("DiscretizedProgram: sigma_bar must be > 0");
  }

  PiecewiseConstantControl control_of(const Vec& u_flat) const {
    return PiecewiseConstantControl::from_flat(u_flat, N, n(), 0.0);
  }
};

struct BarrierPoint {
  Vec u;         // flattened nN
  double sigma = 0.0;

  Vec stacked() const {
    Vec z(u.size() + 1);
    z.head(u.size()) = u;
    z[u.size()] = sigma;
    return z;
  }
  static BarrierPoint from_stacked(const Vec& z) {
    BarrierPoint p;
    p.u = z.head(z.size() - 1);
    p.sigma = z[z.size() - 1];
    return p;
  }
};

struct BarrierEval {
  double value = 0.0;
  Vec grad;  // nN + 1
  Mat hess;  // (nN+1)^2, positive definite on the strict domain
  double objective = 0.0;  // P(u), a byproduct of the epigraph term
};

namespace detail {
inline void reject(BarrierGroup group, int index, const std::string& what) {
  std::ostringstream os;
  os << "barrier domain violation in " << to_string(group) << " term";
  if (index >= 0) os << " #" << index;
  os << ": " << what;
  throw DomainViolation(group, index, os.str());
}
}  // namespace detail

/// Evaluates the log barrier
///   -ln(sigma - P(u)) - ln(sigma_bar - sigma)
///   - sum_i ln(b_i - (A x(1))_i) - sum_{k,i} ln(ell^2 - (u_k^(i))^2)
/// with exact gradient/Hessian assembled from the objective derivatives and
/// the log-composition calculus. Points within 1e-12 (relative) of any
/// boundary raise DomainViolation instead of returning huge finite values.
inline BarrierEval barrier_eval(const DiscretizedProgram& prog, const BarrierPoint& pt,
                                bool want_derivatives = true) {
  prog.validate();
  const int n = prog.n(), N = prog.N, m = prog.m();
  const int du = n * N, D = du + 1;
  if (pt.u.size() != du) throw ConfigError("barrier_eval: point dimension mismatch");

  const PiecewiseConstantControl u = prog.control_of(pt.u);
  const ObjectiveEval P =
      objective_eval(u, prog.problem.lagrangian, prog.quad, want_derivatives, want_derivatives);

  BarrierEval out;
  out.objective = P.value;
  if (want_derivatives) {
    out.grad = Vec::Zero(D);
    out.hess = Mat::Zero(D, D);
  }

  // Epigraph: -ln(sigma - P(u)).
  const double s1 = pt.sigma - P.value;
  if (!(s1 > 1e-12 * (1.0 + std::abs(pt.sigma) + std::abs(P.value))))
    detail::reject(BarrierGroup::Epigraph, -1, "sigma - P(u) = " + std::to_string(s1));
  out.value -= std::log(s1);

  // Cap: -ln(sigma_bar - sigma).
  const double s2 = prog.sigma_bar - pt.sigma;
  if (!(s2 > 1e-12 * (1.0 + std::abs(prog.sigma_bar))))
    detail::reject(BarrierGroup::SigmaCap, -1, "sigma_bar - sigma = " + std::to_string(s2));
  out.value -= std::log(s2);

  // Polyhedral: -sum_i ln(b_i - <A_i, fA * sum_k u_k>).
  const double fA = prog.endpoint_factor();
  Vec usum = Vec::Zero(n);
  for (int k = 0; k < N; ++k) usum += pt.u.segment(k * n, n);
  const Vec slack = prog.problem.endpoint.b - prog.problem.endpoint.A * (fA * usum);
  for (int i = 0; i < m; ++i) {
    if (!(slack[i] > 1e-12 * (1.0 + std::abs(prog.problem.endpoint.b[i]))))
      detail::reject(BarrierGroup::Polyhedral, i, "slack = " + std::to_string(slack[i]));
    out.value -= std::log(slack[i]);
  }

  // Box: -sum_{k,i} ln(ell^2 - w^2).
  const double ell2 = prog.ell * prog.ell;
  for (int j = 0; j < du; ++j) {
    const double s4 = ell2 - pt.u[j] * pt.u[j];
    if (!(s4 > 1e-12 * ell2))
      detail::reject(BarrierGroup::Box, j, "ell^2 - u^2 = " + std::to_string(s4));
    out.value -= std::log(s4);
  }

  if (!want_derivatives) return out;

  // Epigraph derivatives.
  out.grad.head(du) = P.grad / s1;
  out.grad[du] = -1.0 / s1;
  out.hess.topLeftCorner(du, du) = P.hess / s1 + P.grad * P.grad.transpose() / (s1 * s1);
  out.hess.block(0, du, du, 1) = -P.grad / (s1 * s1);
  out.hess.block(du, 0, 1, du) = -P.grad.transpose() / (s1 * s1);
  out.hess(du, du) = 1.0 / (s1 * s1);

  // Cap derivatives.
  out.grad[du] += 1.0 / s2;
  out.hess(du, du) += 1.0 / (s2 * s2);

  // Polyhedral derivatives: identical per interval block.
  Vec w3 = Vec::Zero(n);
  Mat B3 = Mat::Zero(n, n);
  for (int i = 0; i < m; ++i) {
    const Vec Ai = prog.problem.endpoint.A.row(i).transpose();
    w3 += Ai / slack[i];
    B3 += Ai * Ai.transpose() / (slack[i] * slack[i]);
  }
  for (int k = 0; k < N; ++k) out.grad.segment(k * n, n) += fA * w3;
  const Mat B3f = (fA * fA) * B3;
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l) out.hess.block(k * n, l * n, n, n) += B3f;

  // Box derivatives.
  for (int j = 0; j < du; ++j) {
    const double w = pt.u[j];
    const double s4 = ell2 - w * w;
    out.grad[j] += 2.0 * w / s4;
    out.hess(j, j) += 2.0 / s4 + 4.0 * w * w / (s4 * s4);
  }
  return out;
}

/// Barrier evaluation bundled with a Cholesky factorization of its Hessian.
/// A failed factorization retries once with a small diagonal shift; a second
/// failure reports the smallest pivot seen.
struct FactoredBarrier {
  BarrierEval eval;
  Eigen::LLT<Mat> llt;
  bool regularized = false;

  FactoredBarrier(const DiscretizedProgram& prog, const BarrierPoint& pt)
      : FactoredBarrier(barrier_eval(prog, pt, true)) {}

  explicit FactoredBarrier(BarrierEval evaluation) : eval(std::move(evaluation)) {
    llt.compute(eval.hess);
    if (llt.info() != Eigen::Success) {
      const double shift = 1e-12 * eval.hess.trace() / eval.hess.rows();
      Mat shifted = eval.hess;
      shifted.diagonal().array() += shift;
      llt.compute(shifted);
      regularized = true;
      if (llt.info() != Eigen::Success) {
        const double pivot = eval.hess.diagonal().minCoeff();
        throw Error("barrier Hessian factorization failed near the boundary "
                    "(smallest diagonal entry " + std::to_string(pivot) + ")");
      }
    }
  }

  Vec solve(const Vec& rhs) const { return llt.solve(rhs); }

  /// ||v||^F at this point: sqrt(v^T H^{-1} v).
  double inv_norm(const Vec& v) const { return std::sqrt(std::max(0.0, v.dot(solve(v)))); }
};

/// ||v||_pt^F = <[H(pt)]^{-1} v, v>^{1/2}.
inline double local_norm(const DiscretizedProgram& prog, const BarrierPoint& pt,
                         const Vec& v) {
  if (v.size() != prog.dim()) throw ConfigError("local_norm: vector dimension mismatch");
  return FactoredBarrier(prog, pt).inv_norm(v);
}

struct NewtonStep {
  Vec step;          // nN + 1
  double decrement;  // local norm of alpha*v + grad
};

/// Newton step for F + alpha * sigma at pt: step = -H^{-1}(alpha v + g) with
/// v the objective direction (0,...,0,1); the decrement is the local norm of
/// the residual gradient.
inline NewtonStep newton_step(const DiscretizedProgram& prog, const BarrierPoint& pt,
                              double alpha) {
  const FactoredBarrier F(prog, pt);
  Vec rhs = F.eval.grad;
  rhs[prog.dim() - 1] += alpha;
  NewtonStep s;
  s.step = -F.solve(rhs);
  s.decrement = std::sqrt(std::max(0.0, -s.step.dot(rhs)));
  return s;
}

}  // namespace varipath
