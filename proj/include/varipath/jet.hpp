#pragma once

#include "varipath/common.hpp"

#include <cmath>
#include <functional>

namespace varipath {

// Maximum number of active independent variables a jet can carry. The
// Lagrangian evaluators need at most 1+2n of them; capping the size keeps
// the carriers on the stack.
inline constexpr int kJetMaxDim = 8;

using JetVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kJetMaxDim, 1>;
using JetMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kJetMaxDim, kJetMaxDim>;

/// Second-order forward-mode carrier: value, gradient and Hessian of one
/// scalar quantity with respect to d independent variables. Arithmetic on
/// jets follows the exact second-order product/chain rules, so Hessians of
/// composed expressions are exact up to roundoff.
struct Jet2 {
  double val = 0.0;
  JetVec grad;
  JetMat hess;

  Jet2() = default;

  Jet2(double v, int dim) : val(v) {
    if (dim < 1 || dim > kJetMaxDim)
      throw ConfigError("Jet2: dimension must be in [1, " +
                        std::to_string(kJetMaxDim) + "], got " + std::to_string(dim));
    grad = JetVec::Zero(dim);
    hess = JetMat::Zero(dim, dim);
  }

  int dim() const { return static_cast<int>(grad.size()); }

  /// Constant with respect to all active variables.
  static Jet2 constant(double v, int dim) { return Jet2(v, dim); }

  /// Independent variable number `index`.
  static Jet2 variable(double v, int dim, int index) {
    Jet2 j(v, dim);
    j.grad[index] = 1.0;
    return j;
  }
};

/// Seeds one jet per component of `point`: component i carries value
/// point[i], unit gradient e_i and zero Hessian.
inline std::vector<Jet2> lift(const Vec& point) {
  const int d = static_cast<int>(point.size());
  if (d < 1) throw ConfigError("lift: empty point");
  std::vector<Jet2> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) out.push_back(Jet2::variable(point[i], d, i));
  return out;
}

inline std::vector<Jet2> lift_constants(const Vec& point) {
  const int d = static_cast<int>(point.size());
  if (d < 1) throw ConfigError("lift_constants: empty point");
  std::vector<Jet2> out;
  out.reserve(d);
  for (int i = 0; i < d; ++i) out.push_back(Jet2::constant(point[i], d));
  return out;
}

namespace detail {
inline void check_dims(const Jet2& a, const Jet2& b) {
  if (a.dim() != b.dim())
    throw ConfigError("Jet2: operand dimension mismatch (" +
                      std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
}
}  // namespace detail

inline Jet2 operator+(const Jet2& a, const Jet2& b) {
  detail::check_dims(a, b);
  Jet2 r = a;
  r.val += b.val;
  r.grad += b.grad;
  r.hess += b.hess;
  return r;
}

inline Jet2 operator+(const Jet2& a, double s) {
  Jet2 r = a;
  r.val += s;
  return r;
}
inline Jet2 operator+(double s, const Jet2& a) { return a + s; }

inline Jet2 operator-(const Jet2& a) {
  Jet2 r = a;
  r.val = -r.val;
  r.grad = -r.grad;
  r.hess = -r.hess;
  return r;
}

inline Jet2 operator-(const Jet2& a, const Jet2& b) {
  detail::check_dims(a, b);
  Jet2 r = a;
  r.val -= b.val;
  r.grad -= b.grad;
  r.hess -= b.hess;
  return r;
}

inline Jet2 operator-(const Jet2& a, double s) {
  Jet2 r = a;
  r.val -= s;
  return r;
}
inline Jet2 operator-(double s, const Jet2& a) { return -(a - s); }

inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  detail::check_dims(a, b);
  Jet2 r(0.0, a.dim());
  r.val = a.val * b.val;
  r.grad = a.val * b.grad + b.val * a.grad;
  r.hess = a.val * b.hess + b.val * a.hess + a.grad * b.grad.transpose() +
           b.grad * a.grad.transpose();
  // The two rank-1 terms land in opposite summation order across the
  // diagonal; mirror the upper triangle so symmetry is bitwise.
  r.hess.template triangularView<Eigen::StrictlyLower>() = r.hess.transpose();
  return r;
}

inline Jet2 operator*(const Jet2& a, double s) {
  Jet2 r = a;
  r.val *= s;
  r.grad *= s;
  r.hess *= s;
  return r;
}
inline Jet2 operator*(double s, const Jet2& a) { return a * s; }

namespace detail {
// Composition h = f(u) with f', f'' supplied by the caller:
//   h.grad = f' u.grad,  h.hess = f' u.hess + f'' u.grad u.gradᵀ.
inline Jet2 compose(const Jet2& u, double f, double fp, double fpp) {
  Jet2 r(0.0, u.dim());
  r.val = f;
  r.grad = fp * u.grad;
  r.hess = fp * u.hess;
  // The outer product is formed first so the scalar scaling cannot break
  // bitwise symmetry.
  if (fpp != 0.0) r.hess += fpp * JetMat(u.grad * u.grad.transpose());
  return r;
}
}  // namespace detail

inline Jet2 inv(const Jet2& a) {
  if (a.val == 0.0) throw Error("Jet2: division by zero");
  const double iv = 1.0 / a.val;
  return detail::compose(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * inv(b); }

inline Jet2 operator/(const Jet2& a, double s) {
  if (s == 0.0) throw Error("Jet2: division by zero");
  return a * (1.0 / s);
}
inline Jet2 operator/(double s, const Jet2& a) { return s * inv(a); }

inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.val);
  return detail::compose(a, e, e, e);
}

inline Jet2 log(const Jet2& a) {
  if (a.val <= 0.0) throw Error("Jet2: log of nonpositive value");
  const double iv = 1.0 / a.val;
  return detail::compose(a, std::log(a.val), iv, -iv * iv);
}

inline Jet2 sqrt(const Jet2& a) {
  if (a.val <= 0.0) throw Error("Jet2: sqrt requires a positive value");
  const double s = std::sqrt(a.val);
  return detail::compose(a, s, 0.5 / s, -0.25 / (s * a.val));
}

/// a^e for real exponent e. At base exactly 0 the derivative factors are the
/// one-sided limits; they must be finite unless the corresponding gradient
/// contribution vanishes identically (e.g. |u|^p through the squared norm).
inline Jet2 pow(const Jet2& a, double e) {
  if (a.val < 0.0) throw Error("Jet2: pow requires a nonnegative base");
  if (a.val == 0.0) {
    if (e <= 0.0) throw Error("Jet2: pow with nonpositive exponent at zero base");
    double fp;
    if (e > 1.0)
      fp = 0.0;
    else if (e == 1.0)
      fp = 1.0;
    else
      throw Error("Jet2: pow gradient unbounded at zero base (exponent < 1)");
    double fpp = 0.0;
    if (e == 2.0) fpp = 2.0;
    if (e > 1.0 && e < 2.0 && a.grad.norm() != 0.0)
      throw Error("Jet2: pow curvature unbounded at zero base (exponent in (1,2))");
    return detail::compose(a, 0.0, fp, fpp);
  }
  const double f = std::pow(a.val, e);
  const double fp = e * std::pow(a.val, e - 1.0);
  const double fpp = e * (e - 1.0) * std::pow(a.val, e - 2.0);
  return detail::compose(a, f, fp, fpp);
}

/// Squared Euclidean norm of a block of jets.
inline Jet2 squared_norm(const std::vector<Jet2>& v, int begin, int count) {
  Jet2 s(0.0, v.at(begin).dim());
  for (int i = 0; i < count; ++i) {
    const Jet2& c = v[begin + i];
    s = s + c * c;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Finite-difference oracle.
// ---------------------------------------------------------------------------

using JetFunction = std::function<Jet2(const std::vector<Jet2>&)>;

struct FdReport {
  double grad_err = 0.0;
  double hess_err = 0.0;
};

/// Compares jet derivatives of f at `point` against central differences with
/// step h. The gradient check differences function values; the Hessian check
/// differences first-order jet gradients, which keeps its roundoff floor at
/// the same scale as the gradient check. Errors are reported relative to
/// max(1, largest reference magnitude).
inline FdReport fd_check(const JetFunction& f, const Vec& point, double h) {
  if (point.size() == 0) throw ConfigError("fd_check: empty point");
  if (h <= 0.0) throw ConfigError("fd_check: step must be positive");
  const int d = static_cast<int>(point.size());
  const Jet2 at = f(lift(point));

  auto value_at = [&](const Vec& x) { return f(lift_constants(x)).val; };
  auto grad_at = [&](const Vec& x) { return JetVec(f(lift(x)).grad); };

  FdReport rep;
  const double gscale = std::max(1.0, at.grad.cwiseAbs().maxCoeff());
  const double hscale = std::max(1.0, at.hess.cwiseAbs().maxCoeff());
  for (int i = 0; i < d; ++i) {
    Vec hi = point, lo = point;
    hi[i] += h;
    lo[i] -= h;
    const double fd = (value_at(hi) - value_at(lo)) / (2.0 * h);
    rep.grad_err = std::max(rep.grad_err, std::abs(fd - at.grad[i]) / gscale);
    const JetVec gcol = (grad_at(hi) - grad_at(lo)) / (2.0 * h);
    for (int j = 0; j < d; ++j)
      rep.hess_err = std::max(rep.hess_err, std::abs(gcol[j] - at.hess(j, i)) / hscale);
  }
  return rep;
}

}  // namespace varipath
