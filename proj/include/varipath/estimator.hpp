#pragma once

#include "varipath/discretize.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace varipath {

struct Provenance {
  std::string method;  // "analytic" | "grid" | "formula" | "search"
  std::string detail;
  std::string str() const { return detail.empty() ? method : method + "(" + detail + ")"; }
};

struct ConstantRecord {
  double value = 0.0;
  Provenance prov;
};

/// The full constants chain. ell bounds the optimal velocity; K_L and
/// sigma_bar feed the discretization rule and the barrier cap.
struct RegularityConstants {
  ConstantRecord r0, c, Lambda0, Lambda1, T0, beta, eta, gamma_bar, Lambda2, varrho,
      ell, K_L, sigma_bar;
};

struct EstimatorOptions {
  int omega_grid = 33;      // points per axis on [0,1] and each x axis
  int u_grid = 33;          // points per axis on u domains
  double safety = 0.05;     // additive grid-max inflation factor
  int t0_points = 32;       // T0 candidates on [t0_min, t0_max]
  double t0_min = 0.03;
  double t0_max = 0.97;
  double r0_max = 1e9;      // search range cap for r0
  int c_quad_panels = 16;   // composite panels for the c integral
  int c_quad_order = 5;
  bool use_analytic = true; // prefer registered closed forms over grids
  int eta_log_points = 241; // log-grid resolution of the eta fallback
};

// ---------------------------------------------------------------------------
// Grid scaffolding for the Omega maximizations.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  for (int i = 0; i < points; ++i) out[i] = lo + (hi - lo) * i / (points - 1);
  return out;
}

/// Grid covering the Euclidean ball of the given radius: box lattice points
/// inside the ball plus radial projections of the outside ones, so the
/// sphere is sampled as well.
inline std::vector<Vec> ball_grid(int n, double radius, int points_per_axis) {
  std::vector<Vec> out;
  if (radius <= 0.0) {
    out.push_back(Vec::Zero(n));
    return out;
  }
  if (n == 1) {
    for (double v : linspace(-radius, radius, points_per_axis)) {
      Vec x(1);
      x << v;
      out.push_back(x);
    }
    return out;
  }
  const std::vector<double> axis = linspace(-radius, radius, points_per_axis);
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = axis[idx[i]];
    const double norm = x.norm();
    out.push_back(norm <= radius || norm == 0.0 ? x : Vec(x * (radius / norm)));
    int d = 0;
    while (d < n && ++idx[d] == points_per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  return out;
}

/// Direction samples scaled to the sphere |u| = radius.
inline std::vector<Vec> sphere_grid(int n, double radius, int points_per_axis) {
  std::vector<Vec> out;
  if (radius == 0.0) {
    out.push_back(Vec::Zero(n));
    return out;
  }
  if (n == 1) {
    Vec a(1), b(1);
    a << -radius;
    b << radius;
    out = {a, b};
    return out;
  }
  const std::vector<double> axis = linspace(-1.0, 1.0, points_per_axis);
  std::vector<int> idx(n, 0);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = axis[idx[i]];
    const double norm = x.norm();
    if (norm > 1e-12) out.push_back(Vec(x * (radius / norm)));
    int d = 0;
    while (d < n && ++idx[d] == points_per_axis) idx[d++] = 0;
    if (d == n) break;
  }
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = radius;
    out.push_back(e);
    out.push_back(Vec(-e));
  }
  return out;
}

inline double inflate(double grid_max, double safety) {
  return grid_max + safety * std::abs(grid_max);
}

}  // namespace detail

/// Domain of the u argument in an Omega maximization.
struct UDomain {
  enum class Kind { None, Fixed, Ball, Sphere } kind = Kind::None;
  Vec fixed_u;
  double radius = 0.0;

  static UDomain none() { return {}; }
  static UDomain fixed(const Vec& u) {
    UDomain d;
    d.kind = Kind::Fixed;
    d.fixed_u = u;
    return d;
  }
  static UDomain ball(double r) {
    UDomain d;
    d.kind = Kind::Ball;
    d.radius = r;
    return d;
  }
  static UDomain sphere(double r) {
    UDomain d;
    d.kind = Kind::Sphere;
    d.radius = r;
    return d;
  }
};

/// Grid maximum of f over [0,1] x {|x| <= c_omega} (x the given u domain),
/// inflated by the safety factor so downstream bounds stay valid upper bounds.
inline double max_over_omega(const std::function<double(double, const Vec&, const Vec&)>& f,
                             int n, double c_omega, const UDomain& udom,
                             const EstimatorOptions& opts) {
  if (opts.omega_grid < 2) throw ConfigError("max_over_omega: need >= 2 grid points per axis");
  const std::vector<double> tgrid = detail::linspace(0.0, 1.0, opts.omega_grid);
  const std::vector<Vec> xgrid = detail::ball_grid(n, c_omega, opts.omega_grid);
  std::vector<Vec> ugrid;
  switch (udom.kind) {
    case UDomain::Kind::None:
      ugrid.push_back(Vec::Zero(n));
      break;
    case UDomain::Kind::Fixed:
      ugrid.push_back(udom.fixed_u);
      break;
    case UDomain::Kind::Ball:
      ugrid = detail::ball_grid(n, udom.radius, opts.u_grid);
      break;
    case UDomain::Kind::Sphere:
      ugrid = detail::sphere_grid(n, udom.radius, opts.u_grid);
      break;
  }
  const long long total = static_cast<long long>(tgrid.size()) * xgrid.size();
  const double best = parallel_max(total, [&](long long i) {
    const double t = tgrid[i / xgrid.size()];
    const Vec& x = xgrid[i % xgrid.size()];
    double local = -std::numeric_limits<double>::infinity();
    for (const Vec& u : ugrid) local = std::max(local, f(t, x, u));
    return local;
  });
  return detail::inflate(best, opts.safety);
}

// ---------------------------------------------------------------------------
// Individual constants.
// ---------------------------------------------------------------------------

/// Smallest r0 >= 0 with theta(r)/r >= 1 for all r >= r0. Exact for
/// affine_power; otherwise a geometric scan plus bisection, rounded upward
/// (a larger r0 only loosens the bounds downstream).
inline ConstantRecord compute_r0(const CoercivityFn& theta, double r_max = 1e9) {
  if (theta.is_affine_power()) {
    theta.require_affine_power();
    const double c0 = theta.coefficients[0], c2 = theta.coefficients[1],
                 p = theta.coefficients[2];
    if (c2 == 0.0)
      throw RangeError("compute_r0: theta is bounded, theta(r)/r >= 1 fails for large r");
    if (p == 2.0) {
      const double disc = 1.0 - 4.0 * c0 * c2;
      const double r0 = disc < 0.0 ? 0.0 : (1.0 + std::sqrt(disc)) / (2.0 * c2);
      return {r0, {"analytic", "affine_power quadratic root"}};
    }
    // phi(r) = c0 + c2 r^p - r has a single interior minimum.
    const double r_star = std::pow(1.0 / (p * c2), 1.0 / (p - 1.0));
    auto phi = [&](double r) { return c0 + c2 * std::pow(r, p) - r; };
    if (phi(r_star) >= 0.0) return {0.0, {"analytic", "affine_power, phi >= 0 everywhere"}};
    double hi = std::max(1.0, 2.0 * r_star);
    while (phi(hi) <= 0.0) hi *= 2.0;
    double lo = r_star;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(mid) >= 0.0 ? hi : lo) = mid;
    }
    return {hi * (1.0 + 1e-12), {"analytic", "affine_power root bisection"}};
  }
  // Generic scan: largest grid point with theta(r)/r < 1 bounds r0 below.
  auto ok = [&](double r) { return theta(r) / r >= 1.0; };
  double last_bad = 0.0;
  bool any_ok_tail = ok(r_max);
  if (!any_ok_tail)
    throw RangeError("compute_r0: theta(r)/r >= 1 not attained within search range");
  for (double r = 1e-9; r <= r_max; r *= 1.25) {
    if (!ok(r)) last_bad = r;
  }
  if (last_bad == 0.0) return {0.0, {"search", "geometric scan, condition holds everywhere"}};
  double lo = last_bad, hi = std::min(last_bad * 1.25, r_max);
  while (!ok(hi)) hi = std::min(hi * 1.25, r_max);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return {hi * (1.0 + 1e-9), {"search", "geometric scan + bisection"}};
}

/// c = r0 + integral over [0,1] of L(t, t a, a).
inline ConstantRecord compute_c(const VariationalProblem& prob, double r0,
                                const QuadratureRule& quad, int panels = 16) {
  const double integral = quad.integrate_composite(
      [&](double t) { return eval(prob.lagrangian, t, Vec(t * prob.a), prob.a); }, 0.0,
      1.0, panels);
  std::ostringstream det;
  det << "r0 + quadrature(order " << quad.order << ", " << panels << " panels)";
  return {r0 + integral, {"formula", det.str()}};
}

/// sup over r >= 0 of r / (theta(r) + beta).
inline ConstantRecord compute_eta(const CoercivityFn& theta, double beta,
                                  const EstimatorOptions& opts = {}) {
  if (beta < 0.0) throw ConfigError("compute_eta: beta must be >= 0");
  if (opts.use_analytic && theta.is_affine_power()) {
    theta.require_affine_power();
    const double c0 = theta.coefficients[0], c2 = theta.coefficients[1],
                 p = theta.coefficients[2];
    const double denom = c0 + beta;
    if (c2 <= 0.0 || denom <= 0.0)
      throw RangeError("compute_eta: supremum is infinite (theta(0)+beta not positive)");
    const double r_star = std::pow(denom / (c2 * (p - 1.0)), 1.0 / p);
    return {r_star * (p - 1.0) / (p * denom), {"analytic", "affine_power stationarity"}};
  }
  // Log-grid scan plus local golden-section refinement.
  auto g = [&](double r) { return r / (theta(r) + beta); };
  double best_r = 1e-9, best = g(best_r);
  const int P = opts.eta_log_points;
  for (int i = 0; i <= P; ++i) {
    const double r = std::pow(10.0, -9.0 + 18.0 * i / P);
    const double v = g(r);
    if (v > best) {
      best = v;
      best_r = r;
    }
  }
  // A maximizer on either end of the range means the supremum lies outside
  // it (sublinear theta, or a pole at r = 0).
  if (best_r <= 1e-9 || best_r >= 1e9 / std::pow(10.0, 18.0 / P))
    throw RangeError("compute_eta: supremum not attained inside the search range "
                     "(theta grows too slowly or theta(0) + beta vanishes)");
  double lo = best_r / std::pow(10.0, 18.0 / P), hi = best_r * std::pow(10.0, 18.0 / P);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    if (g(x1) < g(x2)) {
      lo = x1;
      x1 = x2;
      x2 = lo + gr * (hi - lo);
    } else {
      hi = x2;
      x2 = x1;
      x1 = hi - gr * (hi - lo);
    }
  }
  const double r_ref = 0.5 * (lo + hi);
  std::ostringstream det;
  det << "log grid " << P + 1 << " pts + golden section";
  return {std::max(best, g(r_ref)), {"grid", det.str()}};
}

/// Smallest varrho such that for r >= varrho the ratio condition holds with a
/// positive denominator; closed-form quadratic roots with a relative margin.
inline ConstantRecord compute_varrho(double mu, double Lambda0, double Lambda1,
                                     double Lambda2, double beta) {
  if (!(mu > 0.0)) throw ConfigError("compute_varrho: mu must be > 0");
  if (!(Lambda2 + beta > 0.0))
    throw ConfigError("compute_varrho: Lambda2 + beta must be positive (ratio threshold undefined)");
  // (mu/2) r^2 - (L1 + L2 + beta) r + (beta - L0) > 0 for r >= varrho.
  const double B = Lambda1 + Lambda2 + beta;
  const double disc = B * B - 2.0 * mu * (beta - Lambda0);
  double root = 0.0;
  if (disc >= 0.0) root = (B + std::sqrt(disc)) / mu;
  // Positivity of (mu/2) r^2 - L1 r - (L0 - beta).
  const double disc_d = Lambda1 * Lambda1 + 2.0 * mu * (Lambda0 - beta);
  double root_d = 0.0;
  if (disc_d >= 0.0) root_d = (Lambda1 + std::sqrt(disc_d)) / mu;
  const double varrho = std::max(0.0, std::max(root, root_d)) * (1.0 + 1e-9);
  return {varrho, {"formula", "larger quadratic root, margin 1e-9"}};
}

/// ell = max{ varrho, sqrt((2/mu)(L0 + beta)), (L1 + sqrt(L1^2 + 4 mu L0))/2 }.
inline ConstantRecord compute_ell(double varrho, double mu, double Lambda0,
                                  double Lambda1, double beta) {
  if (!(mu > 0.0)) throw ConfigError("compute_ell: mu must be > 0");
  const double t2 = std::sqrt(std::max(0.0, 2.0 / mu * (Lambda0 + beta)));
  const double t3 =
      0.5 * (Lambda1 + std::sqrt(Lambda1 * Lambda1 + 4.0 * mu * std::max(0.0, Lambda0)));
  return {std::max(varrho, std::max(t2, t3)), {"formula", "max of three closed forms"}};
}

/// K_L = max |grad_{t,x,u} L| over [0,1] x ellB x ellB.
inline ConstantRecord compute_KL(const LagrangianSpec& L, double ell,
                                 const EstimatorOptions& opts = {}) {
  if (!(ell > 0.0)) throw ConfigError("compute_KL: ell must be > 0");
  if (opts.use_analytic) {
    if (const auto v = analytic_grad_norm_max(L, ell)) return {*v, {"analytic", L.family}};
  }
  const ResolvedLagrangian rl = resolve(L);
  const double v = max_over_omega(
      [&](double t, const Vec& x, const Vec& u) {
        const LagrangianGrad g = eval_grad(rl, t, x, u);
        return std::sqrt(g.dt * g.dt + g.dx.squaredNorm() + g.du.squaredNorm());
      },
      L.n, ell, UDomain::ball(ell), opts);
  std::ostringstream det;
  det << "grid " << opts.omega_grid << "^tx x " << opts.u_grid << "^u, safety " << opts.safety;
  return {v, {"grid", det.str()}};
}

/// sigma_bar = L(0,0,0) + K_L (1 + 2 ell).
inline ConstantRecord compute_sigma_bar(const LagrangianSpec& L, double K_L, double ell) {
  const Vec zero = Vec::Zero(L.n);
  return {eval(L, 0.0, zero, zero) + K_L * (1.0 + 2.0 * ell), {"formula", "L(0,0,0) + K_L(1+2ell)"}};
}

using SigmaFn = std::function<double(double)>;

/// sigma(r) = max over Omega, |u| <= r of (<grad_u L, u> - L).
inline SigmaFn make_sigma_fn(const VariationalProblem& prob, double c_omega,
                             const EstimatorOptions& opts, Provenance* prov = nullptr) {
  if (opts.use_analytic) {
    bool available = analytic_sigma(prob.lagrangian, 1.0, c_omega).has_value();
    if (available) {
      if (prov) *prov = {"analytic", prob.lagrangian.family};
      const LagrangianSpec L = prob.lagrangian;
      return [L, c_omega](double r) { return *analytic_sigma(L, r, c_omega); };
    }
  }
  if (prov) {
    std::ostringstream det;
    det << "grid " << opts.omega_grid << "^tx x " << opts.u_grid << "^u, safety " << opts.safety;
    *prov = {"grid", det.str()};
  }
  const ResolvedLagrangian rl = resolve(prob.lagrangian);
  const int n = prob.n();
  const EstimatorOptions o = opts;
  return [rl, n, c_omega, o](double r) {
    return max_over_omega(
        [&](double t, const Vec& x, const Vec& u) {
          const LagrangianGrad g = eval_grad(rl, t, x, u);
          return g.du.dot(u) - eval(rl, t, x, u);
        },
        n, c_omega, UDomain::ball(r), o);
  };
}

struct T0Selection {
  double T0 = 0.0;
  double beta = 0.0;
  double ell = 0.0;
};

/// Scans the T0 grid, keeps candidates with beta = sigma((c+1)/T0) above
/// delta/xi, and returns the one minimizing the resulting ell. Any admissible
/// T0 yields a valid bound; the grid picks the best available.
inline T0Selection select_T0_beta(const SigmaFn& sigma, double c, double delta_over_xi,
                                  const std::function<double(double T0, double beta)>& ell_of,
                                  const EstimatorOptions& opts = {}) {
  T0Selection best;
  bool found = false;
  for (int i = 0; i < opts.t0_points; ++i) {
    const double T0 =
        opts.t0_points == 1
            ? opts.t0_min
            : opts.t0_min + (opts.t0_max - opts.t0_min) * i / (opts.t0_points - 1);
    const double beta = sigma((c + 1.0) / T0);
    if (!(beta > delta_over_xi)) continue;
    const double ell = ell_of(T0, beta);
    if (!std::isfinite(ell)) continue;
    if (!found || ell < best.ell) {
      best = {T0, beta, ell};
      found = true;
    }
  }
  if (!found)
    throw RangeError("select_T0_beta: no admissible T0 in grid (sigma growth too slow "
                     "or beta <= delta/xi throughout)");
  return best;
}

// ---------------------------------------------------------------------------
// Full chain.
// ---------------------------------------------------------------------------

inline RegularityConstants compute_all(const VariationalProblem& prob,
                                       const EstimatorOptions& opts = {}) {
  prob.validate();
  const LagrangianSpec& L = prob.lagrangian;
  const ResolvedLagrangian rl = resolve(L);
  RegularityConstants out;

  out.r0 = compute_r0(prob.theta, opts.r0_max);
  const QuadratureRule quad = QuadratureRule::gauss_legendre(opts.c_quad_order);
  out.c = compute_c(prob, out.r0.value, quad, opts.c_quad_panels);
  const double c_omega = out.c.value;

  std::ostringstream grid_det;
  grid_det << "grid " << opts.omega_grid << ", safety " << opts.safety;

  if (opts.use_analytic && analytic_lambda0(L, c_omega)) {
    out.Lambda0 = {*analytic_lambda0(L, c_omega), {"analytic", L.family}};
  } else {
    const double v = max_over_omega(
        [&](double t, const Vec& x, const Vec& u) { return eval(rl, t, x, u); }, L.n,
        c_omega, UDomain::fixed(Vec::Zero(L.n)), opts);
    out.Lambda0 = {v, {"grid", grid_det.str()}};
  }

  if (opts.use_analytic && analytic_lambda1(L, c_omega)) {
    out.Lambda1 = {*analytic_lambda1(L, c_omega), {"analytic", L.family}};
  } else {
    const double v = max_over_omega(
        [&](double t, const Vec& x, const Vec& u) { return eval_grad(rl, t, x, u).du.norm(); },
        L.n, c_omega, UDomain::fixed(Vec::Zero(L.n)), opts);
    out.Lambda1 = {v, {"grid", grid_det.str()}};
  }

  Provenance sigma_prov;
  const SigmaFn sigma = make_sigma_fn(prob, c_omega, opts, &sigma_prov);

  // Downstream chain evaluated per T0 candidate; Lambda2 feeds the scan.
  struct Tail {
    ConstantRecord eta, gamma_bar, Lambda2, varrho, ell;
  };
  auto tail_of = [&](double T0, double beta) -> Tail {
    Tail t;
    t.eta = compute_eta(prob.theta, beta, opts);
    const double exponent = t.eta.value * prob.reg.xi * (c_omega + T0 * beta);
    t.gamma_bar = {std::exp(exponent), {"formula", "exp(eta xi (c + T0 beta))"}};
    const double radius = t.gamma_bar.value + 1.0;
    if (!std::isfinite(radius)) {
      t.ell = {std::numeric_limits<double>::infinity(), {"formula", "overflow"}};
      return t;
    }
    if (opts.use_analytic && analytic_lmax_sphere(L, radius, c_omega)) {
      t.Lambda2 = {*analytic_lmax_sphere(L, radius, c_omega), {"analytic", L.family}};
    } else {
      const double v = max_over_omega(
          [&](double tt, const Vec& x, const Vec& u) { return eval(rl, tt, x, u); }, L.n,
          c_omega, UDomain::sphere(radius), opts);
      t.Lambda2 = {v, {"grid", grid_det.str()}};
    }
    t.varrho = compute_varrho(prob.reg.mu, out.Lambda0.value, out.Lambda1.value,
                              t.Lambda2.value, beta);
    t.ell = compute_ell(t.varrho.value, prob.reg.mu, out.Lambda0.value, out.Lambda1.value,
                        beta);
    return t;
  };

  const T0Selection sel = select_T0_beta(
      sigma, c_omega, prob.reg.delta / prob.reg.xi,
      [&](double T0, double beta) { return tail_of(T0, beta).ell.value; }, opts);

  std::ostringstream t0_det;
  t0_det << opts.t0_points << " pts on [" << opts.t0_min << "," << opts.t0_max
         << "], min-ell";
  out.T0 = {sel.T0, {"search", t0_det.str()}};
  out.beta = {sel.beta, {"formula", "sigma((c+1)/T0), sigma " + sigma_prov.str()}};

  const Tail tail = tail_of(sel.T0, sel.beta);
  out.eta = tail.eta;
  out.gamma_bar = tail.gamma_bar;
  out.Lambda2 = tail.Lambda2;
  out.varrho = tail.varrho;
  out.ell = tail.ell;

  out.K_L = compute_KL(L, out.ell.value, opts);
  out.sigma_bar = compute_sigma_bar(L, out.K_L.value, out.ell.value);
  return out;
}

}  // namespace varipath
