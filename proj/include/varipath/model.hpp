#pragma once

#include "varipath/jet.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>

namespace varipath {

// ---------------------------------------------------------------------------
// Coercivity minorant theta.
// ---------------------------------------------------------------------------

/// Registered lower-bound families for the superlinear growth of L in |u|.
///   affine_power: theta(r) = c0 + c2 r^p   (coefficients [c0, c2, p], p > 1)
///   log1p:        theta(r) = ln(1 + r)     (grows sublinearly; useful to
///                                           exercise failure reporting)
struct CoercivityFn {
  std::string family = "affine_power";
  Vec coefficients;

  double operator()(double r) const {
    if (family == "affine_power") {
      require_affine_power();
      return coefficients[0] + coefficients[1] * std::pow(r, coefficients[2]);
    }
    if (family == "log1p") return std::log1p(r);
    throw ConfigError("CoercivityFn: unknown family '" + family + "'");
  }

  bool is_affine_power() const { return family == "affine_power"; }

  void require_affine_power() const {
    if (coefficients.size() != 3)
      throw ConfigError("CoercivityFn: affine_power needs coefficients [c0, c2, p]");
    if (coefficients[2] <= 1.0)
      throw ConfigError("CoercivityFn: affine_power exponent must be > 1");
    if (coefficients[0] < 0.0 || coefficients[1] < 0.0 ||
        coefficients[0] + coefficients[1] <= 0.0)
      throw ConfigError("CoercivityFn: affine_power coefficients must be >= 0, not both 0");
  }

  /// Samples r/theta(r) on a geometric grid and reports whether the ratio is
  /// eventually decreasing, a falsifiable proxy for r/theta(r) -> 0.
  bool superlinear_on_samples(double r_max = 1e6) const {
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (double r = 1.0; r <= r_max; r *= 2.0) {
      const double ratio = r / (*this)(r);
      if (r >= 64.0 && ratio > prev) decreasing = false;
      prev = ratio;
    }
    return decreasing && prev < 1.0;
  }
};

/// Moduli declared with a problem instance: strict-convexity modulus mu,
/// gradient-growth coefficients xi and delta.
struct RegularityParams {
  double mu = 1.0;
  double xi = 1.0;
  double delta = 0.0;

  void validate() const {
    if (!(mu > 0.0)) throw ConfigError("RegularityParams: mu must be > 0");
    if (!(xi > 0.0)) throw ConfigError("RegularityParams: xi must be > 0");
    if (delta < 0.0) throw ConfigError("RegularityParams: delta must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Polyhedral end-point set S = { x : A x <= b }.
// ---------------------------------------------------------------------------

struct PolyhedralSet {
  Mat A;  // m x n
  Vec b;  // m

  int rows() const { return static_cast<int>(A.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }

  void validate() const {
    if (A.rows() < 1) throw ConfigError("PolyhedralSet: need at least one row");
    if (b.size() != A.rows()) throw ConfigError("PolyhedralSet: A/b row mismatch");
  }
};

inline bool feasible(const PolyhedralSet& S, const Vec& x, bool strict = false) {
  if (x.size() != S.A.cols())
    throw ConfigError("feasible: point dimension " + std::to_string(x.size()) +
                      " does not match set dimension " + std::to_string(S.A.cols()));
  const Vec slack = S.b - S.A * x;
  for (int i = 0; i < slack.size(); ++i) {
    if (strict ? !(slack[i] > 0.0) : !(slack[i] >= 0.0)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Lagrangian families.
// ---------------------------------------------------------------------------

enum class FamilyId { Quad1, Quad, Power };

inline FamilyId parse_family(const std::string& name) {
  if (name == "quad1") return FamilyId::Quad1;
  if (name == "quad") return FamilyId::Quad;
  if (name == "power") return FamilyId::Power;
  throw ConfigError("LagrangianSpec: unknown family '" + name + "'");
}

/// A Lagrangian drawn from a registered closed-form family.
///
///   quad1: params [c, qu, rx] (or empty for [1,1,1])
///          L = c + (qu/2)|u|^2 + (rx/2)|x|^2
///   quad:  params [c, Q(n*n row-major), R(n*n), q0(n), q1(n)]
///          L = c + (1/2)<Qu,u> + (1/2)<Rx,x> + <q0 + q1 t, x>
///   power: params [c, alpha, p, qu, rx], p >= 2
///          L = c + alpha|u|^p + (qu/2)|u|^2 + (rx/2)|x|^2
struct LagrangianSpec {
  std::string family = "quad1";
  Vec params;
  int n = 1;

  FamilyId id() const { return parse_family(family); }

  Vec effective_params() const {
    if (id() == FamilyId::Quad1 && params.size() == 0) {
      Vec def(3);
      def << 1.0, 1.0, 1.0;
      return def;
    }
    return params;
  }

  void validate() const {
    if (n < 1) throw ConfigError("LagrangianSpec: n must be >= 1");
    const Vec p = effective_params();
    switch (id()) {
      case FamilyId::Quad1:
        if (p.size() != 3) throw ConfigError("quad1: params must be [c, qu, rx]");
        if (p[1] < 0.0 || p[2] < 0.0) throw ConfigError("quad1: qu, rx must be >= 0");
        break;
      case FamilyId::Quad: {
        const long expect = 1 + 2L * n * n + 2L * n;
        if (p.size() != expect)
          throw ConfigError("quad: params must be [c, Q(n*n), R(n*n), q0(n), q1(n)], expected " +
                            std::to_string(expect) + " values");
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < i; ++j) {
            if (std::abs(p[1 + i * n + j] - p[1 + j * n + i]) > 1e-12)
              throw ConfigError("quad: Q must be symmetric");
            if (std::abs(p[1 + n * n + i * n + j] - p[1 + n * n + j * n + i]) > 1e-12)
              throw ConfigError("quad: R must be symmetric");
          }
        break;
      }
      case FamilyId::Power:
        if (p.size() != 5) throw ConfigError("power: params must be [c, alpha, p, qu, rx]");
        if (p[2] < 2.0) throw ConfigError("power: exponent must be >= 2 (C^2 at u = 0)");
        if (p[1] < 0.0 || p[3] < 0.0 || p[4] < 0.0)
          throw ConfigError("power: alpha, qu, rx must be >= 0");
        break;
    }
  }
};

/// Validated, dispatch-ready form of a LagrangianSpec. Resolving once outside
/// evaluation loops keeps the per-point cost down to the arithmetic itself.
struct ResolvedLagrangian {
  FamilyId id = FamilyId::Quad1;
  int n = 1;
  Vec params;
};

inline ResolvedLagrangian resolve(const LagrangianSpec& spec) {
  spec.validate();
  return {spec.id(), spec.n, spec.effective_params()};
}

namespace detail {

template <typename S>
S make_const(double v, const S& like);

template <>
inline double make_const<double>(double v, const double&) {
  return v;
}
template <>
inline Jet2 make_const<Jet2>(double v, const Jet2& like) {
  return Jet2::constant(v, like.dim());
}

template <typename S>
S sumsq(const std::vector<S>& v, int begin, int count, const S& like) {
  S s = make_const<S>(0.0, like);
  for (int i = 0; i < count; ++i) s = s + v[begin + i] * v[begin + i];
  return s;
}

template <typename S>
S pow_s(const S& a, double e) {
  using std::pow;
  return pow(a, e);
}

}  // namespace detail

/// Family evaluation over any scalar supporting the jet arithmetic. x and u
/// are stored consecutively in `vars` starting at x_off / u_off.
template <typename S>
S lagrangian_value(const ResolvedLagrangian& spec, const S& t, const std::vector<S>& vars,
                   int x_off, int u_off) {
  const Vec& p = spec.params;
  const int n = spec.n;
  switch (spec.id) {
    case FamilyId::Quad1: {
      S s = detail::sumsq(vars, u_off, n, t) * (0.5 * p[1]) +
            detail::sumsq(vars, x_off, n, t) * (0.5 * p[2]);
      return s + p[0];
    }
    case FamilyId::Quad: {
      const int qo = 1, ro = 1 + n * n, l0 = 1 + 2 * n * n, l1 = l0 + n;
      S s = detail::make_const<S>(p[0], t);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          if (p[qo + i * n + j] != 0.0)
            s = s + vars[u_off + i] * vars[u_off + j] * (0.5 * p[qo + i * n + j]);
          if (p[ro + i * n + j] != 0.0)
            s = s + vars[x_off + i] * vars[x_off + j] * (0.5 * p[ro + i * n + j]);
        }
      for (int i = 0; i < n; ++i) {
        if (p[l0 + i] != 0.0) s = s + vars[x_off + i] * p[l0 + i];
        if (p[l1 + i] != 0.0) s = s + t * vars[x_off + i] * p[l1 + i];
      }
      return s;
    }
    case FamilyId::Power: {
      S s = detail::make_const<S>(p[0], t);
      if (p[1] != 0.0)
        s = s + detail::pow_s(detail::sumsq(vars, u_off, n, t), 0.5 * p[2]) * p[1];
      if (p[3] != 0.0) s = s + detail::sumsq(vars, u_off, n, t) * (0.5 * p[3]);
      if (p[4] != 0.0) s = s + detail::sumsq(vars, x_off, n, t) * (0.5 * p[4]);
      return s;
    }
  }
  throw ConfigError("LagrangianSpec: unreachable family");
}

template <typename S>
S lagrangian_value(const LagrangianSpec& spec, const S& t, const std::vector<S>& vars,
                   int x_off, int u_off) {
  return lagrangian_value<S>(resolve(spec), t, vars, x_off, u_off);
}

inline void check_point_dims(int n, const Vec& x, const Vec& u) {
  if (x.size() != n || u.size() != n)
    throw ConfigError("Lagrangian evaluation: x/u dimension mismatch (n = " +
                      std::to_string(n) + ")");
}

/// L(t, x, u) as a plain double.
inline double eval(const ResolvedLagrangian& spec, double t, const Vec& x, const Vec& u) {
  check_point_dims(spec.n, x, u);
  std::vector<double> vars(2 * spec.n);
  for (int i = 0; i < spec.n; ++i) {
    vars[i] = x[i];
    vars[spec.n + i] = u[i];
  }
  const double v = lagrangian_value<double>(spec, t, vars, 0, spec.n);
  if (!std::isfinite(v)) throw Error("Lagrangian evaluation produced a non-finite value");
  return v;
}

inline double eval(const LagrangianSpec& spec, double t, const Vec& x, const Vec& u) {
  return eval(resolve(spec), t, x, u);
}

struct LagrangianGrad {
  double dt = 0.0;
  Vec dx;
  Vec du;
};

struct LagrangianHess {
  Mat Hxx;
  Mat Hxu;  // d(grad_x L)/du
  Mat Huu;
};

/// Full second-order expansion at (t, x, u) via jets over the 1+2n variables.
inline void eval_derivatives(const ResolvedLagrangian& spec, double t, const Vec& x,
                             const Vec& u, double* value, LagrangianGrad* grad,
                             LagrangianHess* hess) {
  check_point_dims(spec.n, x, u);
  const int n = spec.n;
  Vec point(1 + 2 * n);
  point[0] = t;
  point.segment(1, n) = x;
  point.segment(1 + n, n) = u;
  const std::vector<Jet2> vars = lift(point);
  const Jet2 L = lagrangian_value<Jet2>(spec, vars[0], vars, 1, 1 + n);
  if (value) *value = L.val;
  if (grad) {
    grad->dt = L.grad[0];
    grad->dx = L.grad.segment(1, n);
    grad->du = L.grad.segment(1 + n, n);
  }
  if (hess) {
    hess->Hxx = L.hess.block(1, 1, n, n);
    hess->Hxu = L.hess.block(1, 1 + n, n, n);
    hess->Huu = L.hess.block(1 + n, 1 + n, n, n);
  }
}

inline void eval_derivatives(const LagrangianSpec& spec, double t, const Vec& x,
                             const Vec& u, double* value, LagrangianGrad* grad,
                             LagrangianHess* hess) {
  eval_derivatives(resolve(spec), t, x, u, value, grad, hess);
}

inline LagrangianGrad eval_grad(const ResolvedLagrangian& spec, double t, const Vec& x,
                                const Vec& u) {
  LagrangianGrad g;
  eval_derivatives(spec, t, x, u, nullptr, &g, nullptr);
  return g;
}

inline LagrangianGrad eval_grad(const LagrangianSpec& spec, double t, const Vec& x,
                                const Vec& u) {
  return eval_grad(resolve(spec), t, x, u);
}

inline LagrangianHess eval_hess(const ResolvedLagrangian& spec, double t, const Vec& x,
                                const Vec& u) {
  LagrangianHess h;
  eval_derivatives(spec, t, x, u, nullptr, nullptr, &h);
  return h;
}

inline LagrangianHess eval_hess(const LagrangianSpec& spec, double t, const Vec& x,
                                const Vec& u) {
  return eval_hess(resolve(spec), t, x, u);
}

// ---------------------------------------------------------------------------
// Closed-form constants per family. Used by the estimator when available;
// absent hooks fall back to safeguarded grid maximization.
// ---------------------------------------------------------------------------

/// max L(t, x, 0) over [0,1] x {|x| <= c_omega}.
inline std::optional<double> analytic_lambda0(const LagrangianSpec& spec, double c_omega) {
  const Vec p = spec.effective_params();
  switch (spec.id()) {
    case FamilyId::Quad1:
      return p[0] + 0.5 * p[2] * c_omega * c_omega;
    case FamilyId::Power:
      return p[0] + 0.5 * p[4] * c_omega * c_omega;
    case FamilyId::Quad:
      return std::nullopt;
  }
  return std::nullopt;
}

/// max |grad_u L(t, x, 0)|; zero for every registered family.
inline std::optional<double> analytic_lambda1(const LagrangianSpec& spec, double) {
  (void)spec;
  return 0.0;
}

/// sigma(r) = max over Omega, |u| <= r of (<grad_u L, u> - L).
inline std::optional<double> analytic_sigma(const LagrangianSpec& spec, double r,
                                            double c_omega) {
  (void)c_omega;  // the x-maximizer is x = 0 for all registered forms
  const Vec p = spec.effective_params();
  switch (spec.id()) {
    case FamilyId::Quad1:
      return 0.5 * p[1] * r * r - p[0];
    case FamilyId::Power:
      return p[1] * (p[2] - 1.0) * std::pow(r, p[2]) + 0.5 * p[3] * r * r - p[0];
    case FamilyId::Quad:
      return std::nullopt;
  }
  return std::nullopt;
}

/// max L over Omega with |u| = radius.
inline std::optional<double> analytic_lmax_sphere(const LagrangianSpec& spec,
                                                  double radius, double c_omega) {
  const Vec p = spec.effective_params();
  switch (spec.id()) {
    case FamilyId::Quad1:
      return p[0] + 0.5 * p[1] * radius * radius + 0.5 * p[2] * c_omega * c_omega;
    case FamilyId::Power:
      return p[0] + p[1] * std::pow(radius, p[2]) + 0.5 * p[3] * radius * radius +
             0.5 * p[4] * c_omega * c_omega;
    case FamilyId::Quad:
      return std::nullopt;
  }
  return std::nullopt;
}

/// max |grad_{t,x,u} L| over [0,1] x ellB x ellB.
inline std::optional<double> analytic_grad_norm_max(const LagrangianSpec& spec,
                                                    double ell) {
  const Vec p = spec.effective_params();
  switch (spec.id()) {
    case FamilyId::Quad1:
      return std::hypot(p[2] * ell, p[1] * ell);
    case FamilyId::Power:
      return std::hypot(p[4] * ell, p[1] * p[2] * std::pow(ell, p[2] - 1.0) + p[3] * ell);
    case FamilyId::Quad:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Problem instance and standing-assumption validation.
// ---------------------------------------------------------------------------

struct VariationalProblem {
  LagrangianSpec lagrangian;
  CoercivityFn theta;
  RegularityParams reg;
  PolyhedralSet endpoint;
  Vec a;  // reference end point, a in S

  int n() const { return lagrangian.n; }
  int m() const { return endpoint.rows(); }

  void validate() const {
    lagrangian.validate();
    reg.validate();
    endpoint.validate();
    if (endpoint.dim() != lagrangian.n)
      throw ConfigError("VariationalProblem: endpoint set dimension != n");
    if (a.size() != lagrangian.n)
      throw ConfigError("VariationalProblem: reference point dimension != n");
    const Vec slack = endpoint.b - endpoint.A * a;
    for (int i = 0; i < slack.size(); ++i)
      if (slack[i] < -1e-12 * std::max(1.0, std::abs(endpoint.b[i])))
        throw ConfigError("VariationalProblem: reference point a violates A a <= b (row " +
                          std::to_string(i) + ")");
  }
};

struct ConditionResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;  // most negative margin seen (0 when clean)
  std::string witness;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;
  bool all_pass() const {
    for (const auto& c : conditions)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {
inline std::string point_str(double t, const Vec& x, const Vec& u, const Vec* v) {
  std::ostringstream os;
  os << "t=" << t << " x=[" << x.transpose() << "] u=[" << u.transpose() << "]";
  if (v) os << " v=[" << v->transpose() << "]";
  return os.str();
}
}  // namespace detail

/// Samples the standing assumptions and reports per-condition pass/fail with
/// a witness for the worst violation. Sampling can only falsify the global
/// statements; a clean report is evidence, not proof.
inline ValidationReport validate_conditions(const VariationalProblem& prob, int samples,
                                            double radius, std::uint64_t seed = 12345) {
  if (samples < 1) throw ConfigError("validate_conditions: samples must be >= 1");
  prob.validate();
  const int n = prob.n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> box(-radius, radius);

  ConditionResult coercive{"C1 coercivity L >= theta(|u|) > 0", true, 0.0, ""};
  ConditionResult convex_u{"C2 strict convexity in u (modulus mu)", true, 0.0, ""};
  ConditionResult grad_growth{"C3 gradient growth |grad_{t,x} L| <= xi L + delta", true, 0.0, ""};
  ConditionResult joint{"(sc) joint strict convexity in (x,u)", true, 0.0, ""};

  auto draw_vec = [&]() {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = box(rng);
    return v;
  };
  auto record = [](ConditionResult& c, double margin, const std::string& witness) {
    if (margin < c.worst) {
      c.worst = margin;
      c.pass = false;
      c.witness = witness;
    }
  };

  for (int s = 0; s < samples; ++s) {
    const double t = unit(rng);
    const Vec x = draw_vec();
    const Vec u = draw_vec();
    const Vec v = draw_vec();
    const Vec x2 = draw_vec();

    const double Lu = eval(prob.lagrangian, t, x, u);
    const double Lv = eval(prob.lagrangian, t, x, v);
    const LagrangianGrad g = eval_grad(prob.lagrangian, t, x, u);
    const double tol = 1e-9 * (1.0 + std::abs(Lu) + std::abs(Lv));

    {  // (C1)
      const double th = prob.theta(u.norm());
      const double margin = std::min(Lu - th, th);
      if (margin < -tol) record(coercive, margin, detail::point_str(t, x, u, nullptr));
    }
    {  // (C2)
      const double gap = Lv - Lu - g.du.dot(v - u) -
                         0.5 * prob.reg.mu * (v - u).squaredNorm();
      if (gap < -tol) record(convex_u, gap, detail::point_str(t, x, u, &v));
    }
    {  // (C3)
      const double lhs = std::sqrt(g.dt * g.dt + g.dx.squaredNorm());
      const double margin = prob.reg.xi * Lu + prob.reg.delta - lhs;
      if (margin < -tol) record(grad_growth, margin, detail::point_str(t, x, u, nullptr));
    }
    {  // (sc)
      const double L2 = eval(prob.lagrangian, t, x2, v);
      const double gap = L2 - Lu - g.dx.dot(x2 - x) - g.du.dot(v - u) -
                         0.5 * prob.reg.mu * ((x2 - x).squaredNorm() + (v - u).squaredNorm());
      if (gap < -tol) record(joint, gap, detail::point_str(t, x, u, &v));
    }
  }

  ValidationReport rep;
  rep.conditions = {coercive, convex_u, grad_growth, joint};
  return rep;
}

}  // namespace varipath
