#pragma once

#include "varipath/model.hpp"
#include "varipath/quadrature.hpp"

#include <cmath>
#include <cstdint>

namespace varipath {

/// Piecewise-constant control on the uniform grid tau = 1/N: row k holds the
/// value taken on (k tau, (k+1) tau]. Induces the piecewise-linear trajectory
/// x(t) = integral of u from 0 to t, so x(0) = 0.
struct PiecewiseConstantControl {
  int N = 0;
  Mat values;  // N x n
  double ell = 0.0;

  int n() const { return static_cast<int>(values.cols()); }
  double tau() const { return 1.0 / N; }

  void validate() const {
    if (N < 1) throw ConfigError("PiecewiseConstantControl: N must be >= 1");
    if (values.rows() != N) throw ConfigError("PiecewiseConstantControl: values must have N rows");
    if (ell > 0.0 && values.cwiseAbs().maxCoeff() > ell)
      throw ConfigError("PiecewiseConstantControl: |values| exceeds the box radius");
  }

  int interval_of(double t) const {
    if (t < 0.0 || t > 1.0) throw ConfigError("trajectory: t must be in [0,1]");
    const int k = static_cast<int>(std::floor(t * N));
    return k >= N ? N - 1 : k;
  }

  /// u(t). The control is constant on each grid interval; at an interior
  /// grid point this evaluates right-continuously (the next interval's
  /// value), at t = 0 the first value, at t = 1 the last.
  Vec at(double t) const { return values.row(interval_of(t)).transpose(); }

  /// x(t) = tau * sum_{j<k} u_j + (t - k tau) u_k with k = floor(t/tau).
  /// The residual is carried in grid units so trajectory(1) reproduces the
  /// endpoint sum bit for bit.
  Vec trajectory(double t) const {
    const int k = interval_of(t);
    Vec x = Vec::Zero(values.cols());
    for (int j = 0; j < k; ++j) x += values.row(j).transpose();
    x += (t * N - k) * values.row(k).transpose();
    return x * tau();
  }

  /// x(1) = tau * sum_k u_k.
  Vec endpoint() const {
    Vec x = Vec::Zero(values.cols());
    for (int j = 0; j < N; ++j) x += values.row(j).transpose();
    return x * tau();
  }

  /// Flattened coordinates, interval-major: (u_0, u_1, ..., u_{N-1}).
  Vec flatten() const {
    Vec z(static_cast<long>(N) * values.cols());
    for (int k = 0; k < N; ++k) z.segment(k * values.cols(), values.cols()) = values.row(k);
    return z;
  }

  static PiecewiseConstantControl from_flat(const Vec& z, int N, int n, double ell) {
    if (z.size() != static_cast<long>(N) * n)
      throw ConfigError("PiecewiseConstantControl: flat size mismatch");
    PiecewiseConstantControl u;
    u.N = N;
    u.ell = ell;
    u.values = Mat(N, n);
    for (int k = 0; k < N; ++k) u.values.row(k) = z.segment(k * n, n);
    return u;
  }
};

/// Control whose trajectory interpolates the given samples x(k tau),
/// k = 0..N: u_k = (x((k+1)tau) - x(k tau)) / tau. samples is (N+1) x n
/// and must start at zero.
inline PiecewiseConstantControl interpolate_reference(const Mat& samples, int N,
                                                      double ell = 0.0) {
  if (samples.rows() != N + 1)
    throw ConfigError("interpolate_reference: need N+1 sample rows");
  PiecewiseConstantControl u;
  u.N = N;
  u.ell = ell;
  u.values = Mat(N, samples.cols());
  for (int k = 0; k < N; ++k)
    u.values.row(k) = (samples.row(k + 1) - samples.row(k)) * static_cast<double>(N);
  return u;
}

inline PiecewiseConstantControl interpolate_reference(
    const std::function<Vec(double)>& x, int N, int n, double ell = 0.0) {
  Mat samples(N + 1, n);
  for (int k = 0; k <= N; ++k) samples.row(k) = x(static_cast<double>(k) / N).transpose();
  return interpolate_reference(samples, N, ell);
}

/// Smallest integer strictly greater than 4 (1 + ell) K_L / epsilon, the grid
/// size that makes the discretization error at most epsilon/2.
inline std::int64_t required_N(double epsilon, double ell, double K_L) {
  if (!(epsilon > 0.0)) throw ConfigError("required_N: epsilon must be > 0");
  if (ell < 0.0 || K_L < 0.0) throw ConfigError("required_N: ell and K_L must be >= 0");
  const double bound = 4.0 * (1.0 + ell) * K_L / epsilon;
  if (bound >= 9e18) throw RangeError("required_N: bound exceeds representable range");
  return static_cast<std::int64_t>(std::floor(bound)) + 1;
}

// ---------------------------------------------------------------------------
// Discretized objective P(u) = sum over intervals of the per-interval
// quadrature of t -> L(t, x(t), u_k), with exact derivatives of the
// quadrature approximation.
// ---------------------------------------------------------------------------

struct ObjectiveEval {
  double value = 0.0;
  Vec grad;  // nN
  Mat hess;  // nN x nN, symmetric
};

/// Assembles value/gradient/Hessian of P in one pass. The trajectory depends
/// on u through prefix sums, so per-interval second-order data is folded into
/// suffix accumulators and the Hessian fill is O((nN)^2) rather than O((nN)^3).
inline ObjectiveEval objective_eval(const PiecewiseConstantControl& u,
                                    const LagrangianSpec& spec, const QuadratureRule& quad,
                                    bool want_grad, bool want_hess) {
  u.validate();
  const ResolvedLagrangian L = resolve(spec);
  if (u.n() != L.n) throw ConfigError("objective_eval: control dimension != n");
  const int N = u.N, n = L.n;
  const double tau = u.tau();
  const int dim = N * n;

  ObjectiveEval out;
  if (want_grad || want_hess) {
    out.grad = Vec::Zero(dim);
  }

  // Prefix trajectory values at interval starts.
  Mat X = Mat::Zero(N, n);
  for (int k = 1; k < N; ++k)
    X.row(k) = X.row(k - 1) + tau * u.values.row(k - 1);

  if (!want_grad && !want_hess) {
    // Fast scalar path.
    std::vector<double> vars(2 * n);
    double acc = 0.0;
    for (int k = 0; k < N; ++k) {
      for (int q = 0; q < quad.order; ++q) {
        const double g = quad.nodes[q];
        const double t = (k + g) * tau;
        for (int i = 0; i < n; ++i) {
          vars[i] = X(k, i) + g * tau * u.values(k, i);
          vars[n + i] = u.values(k, i);
        }
        acc += quad.weights[q] * tau * lagrangian_value<double>(L, t, vars, 0, n);
      }
    }
    out.value = acc;
    return out;
  }

  // Per-interval quadrature accumulators (see header comment).
  Mat A_k = Mat::Zero(N, n);   // sum_q w grad_x
  Mat D_k = Mat::Zero(N, n);   // sum_q w (g tau grad_x + grad_u)
  std::vector<Mat> M(want_hess ? N : 0), V(want_hess ? N : 0), S(want_hess ? N : 0);
  std::vector<Mat> Pm(want_hess ? N : 0), R(want_hess ? N : 0), U(want_hess ? N : 0);

  Vec point(2 * n);
  double acc = 0.0;
  for (int k = 0; k < N; ++k) {
    if (want_hess) {
      M[k] = Mat::Zero(n, n);
      V[k] = Mat::Zero(n, n);
      S[k] = Mat::Zero(n, n);
      Pm[k] = Mat::Zero(n, n);
      R[k] = Mat::Zero(n, n);
      U[k] = Mat::Zero(n, n);
    }
    for (int q = 0; q < quad.order; ++q) {
      const double g = quad.nodes[q];
      const double t = (k + g) * tau;
      const double w = quad.weights[q] * tau;
      const double ct = g * tau;  // d x(t)/d u_k coefficient on the own interval
      for (int i = 0; i < n; ++i) {
        point[i] = X(k, i) + ct * u.values(k, i);
        point[n + i] = u.values(k, i);
      }
      const std::vector<Jet2> vars = lift(point);
      const Jet2 Lj = lagrangian_value<Jet2>(L, Jet2::constant(t, 2 * n), vars, 0, n);
      acc += w * Lj.val;
      const auto gx = Lj.grad.head(n);
      const auto gu = Lj.grad.tail(n);
      A_k.row(k) += w * gx.transpose();
      D_k.row(k) += w * (ct * gx + gu).transpose();
      if (want_hess) {
        const Mat Hxx = Lj.hess.block(0, 0, n, n);
        const Mat Hxu = Lj.hess.block(0, n, n, n);
        const Mat Huu = Lj.hess.block(n, n, n, n);
        M[k] += w * Hxx;
        V[k] += (w * ct) * Hxx;
        S[k] += (w * ct * ct) * Hxx;
        Pm[k] += w * Hxu;
        R[k] += (w * ct) * Hxu;
        U[k] += w * Huu;
      }
    }
  }
  out.value = acc;

  // grad block j = tau * sum_{k>j} A_k + D_j.
  Vec suffix = Vec::Zero(n);
  for (int j = N - 1; j >= 0; --j) {
    out.grad.segment(j * n, n) = tau * suffix + D_k.row(j).transpose();
    suffix += A_k.row(j).transpose();
  }

  if (want_hess) {
    out.hess = Mat::Zero(dim, dim);
    // W_j = sum_{k>j} M_k.
    std::vector<Mat> W(N);
    Mat wacc = Mat::Zero(n, n);
    for (int j = N - 1; j >= 0; --j) {
      W[j] = wacc;
      wacc += M[j];
    }
    const double tau2 = tau * tau;
    for (int l = 0; l < N; ++l) {
      const Mat diag = tau2 * W[l] + S[l] + R[l] + R[l].transpose() + U[l];
      out.hess.block(l * n, l * n, n, n) = diag;
      const Mat off = tau2 * W[l] + tau * (V[l] + Pm[l]);
      for (int j = 0; j < l; ++j) {
        out.hess.block(j * n, l * n, n, n) = off;
        out.hess.block(l * n, j * n, n, n) = off.transpose();
      }
    }
  }
  return out;
}

inline double objective_P(const PiecewiseConstantControl& u, const LagrangianSpec& L,
                          const QuadratureRule& quad) {
  return objective_eval(u, L, quad, false, false).value;
}

inline Vec objective_grad(const PiecewiseConstantControl& u, const LagrangianSpec& L,
                          const QuadratureRule& quad) {
  return objective_eval(u, L, quad, true, false).grad;
}

inline Mat objective_hess(const PiecewiseConstantControl& u, const LagrangianSpec& L,
                          const QuadratureRule& quad) {
  return objective_eval(u, L, quad, true, true).hess;
}

}  // namespace varipath
