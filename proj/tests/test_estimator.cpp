#include "varipath/estimator.hpp"

#include <gtest/gtest.h>

#include <iostream>
#include <random>

using namespace varipath;

namespace {

CoercivityFn affine_power(double c0, double c2, double p) {
  CoercivityFn th;
  th.family = "affine_power";
  th.coefficients = Vec(3);
  th.coefficients << c0, c2, p;
  return th;
}

VariationalProblem quad1_problem(double B = 1.0) {
  VariationalProblem p;
  p.lagrangian.family = "quad1";
  p.lagrangian.n = 1;
  p.lagrangian.params = Vec(3);
  p.lagrangian.params << 1.0, 1.0, 1.0;
  p.theta = affine_power(1.0, 0.5, 2.0);
  p.reg = {1.0, 1.0, 0.0};
  p.endpoint.A = Mat(1, 1);
  p.endpoint.A << -1.0;
  p.endpoint.b = Vec(1);
  p.endpoint.b << -B;
  p.a = Vec(1);
  p.a << B;
  return p;
}

}  // namespace

TEST(Estimator, R0ForRegisteredThetas) {
  EXPECT_DOUBLE_EQ(compute_r0(affine_power(1.0, 0.5, 2.0)).value, 0.0);
  EXPECT_DOUBLE_EQ(compute_r0(affine_power(0.0, 1.0, 2.0)).value, 1.0);
  CoercivityFn logt;
  logt.family = "log1p";
  EXPECT_THROW(compute_r0(logt), RangeError);
}

TEST(Estimator, R0NonQuadraticExponent) {
  // theta = 0.1 + 0.1 r^3: the largest root of theta(r) = r solves
  // r^3 - 10 r + 1 = 0, which is 3.11103905207 (cubic root oracle).
  const double r0 = compute_r0(affine_power(0.1, 0.1, 3.0)).value;
  const double phi = 0.1 + 0.1 * r0 * r0 * r0 - r0;
  EXPECT_NEAR(phi, 0.0, 1e-8);
  EXPECT_GE(phi, 0.0);  // upward rounded
  EXPECT_NEAR(r0, 3.11103905207, 1e-8);
}

TEST(Estimator, ConstantC) {
  const auto quad = QuadratureRule::gauss_legendre(5);
  EXPECT_NEAR(compute_c(quad1_problem(1.0), 0.0, quad).value, 5.0 / 3.0, 1e-14);

  VariationalProblem slack = quad1_problem(0.0);
  EXPECT_NEAR(compute_c(slack, 0.0, quad).value, 1.0, 1e-14);

  VariationalProblem flat = quad1_problem(0.0);
  flat.lagrangian.params << 1.0, 0.0, 0.0;  // L == 1
  EXPECT_NEAR(compute_c(flat, 2.0, quad).value, 3.0, 1e-14);
}

TEST(Estimator, OmegaMaxGridAgainstClosedForm) {
  const auto prob = quad1_problem();
  const double c = 5.0 / 3.0;
  EstimatorOptions opts;
  // Lambda0: the boundary x = +/-c sits on the grid, so the scan is exact and
  // only the safety inflation remains.
  const double l0 = max_over_omega(
      [&](double t, const Vec& x, const Vec& u) { return eval(prob.lagrangian, t, x, u); },
      1, c, UDomain::fixed(Vec::Zero(1)), opts);
  EXPECT_NEAR(l0, (43.0 / 18.0) * 1.05, 1e-12);
  const double l1 = max_over_omega(
      [&](double t, const Vec& x, const Vec& u) {
        return eval_grad(prob.lagrangian, t, x, u).du.norm();
      },
      1, c, UDomain::fixed(Vec::Zero(1)), opts);
  EXPECT_DOUBLE_EQ(l1, 0.0);
}

TEST(Estimator, SigmaClosedForm) {
  const auto prob = quad1_problem();
  EstimatorOptions opts;
  Provenance prov;
  const SigmaFn sigma = make_sigma_fn(prob, 5.0 / 3.0, opts, &prov);
  EXPECT_EQ(prov.method, "analytic");
  for (double r : {0.0, 1.0, 3.0, 10.0})
    EXPECT_NEAR(sigma(r), 0.5 * r * r - 1.0, 1e-12);
  // Grid route stays within the safety margin of the closed form.
  opts.use_analytic = false;
  const SigmaFn sigma_grid = make_sigma_fn(prob, 5.0 / 3.0, opts, &prov);
  EXPECT_EQ(prov.method, "grid");
  for (double r : {2.0, 5.0}) {
    const double exact = 0.5 * r * r - 1.0;
    EXPECT_GE(sigma_grid(r), exact - 1e-9);
    EXPECT_LE(sigma_grid(r), exact * 1.05 + 1e-9);
  }
}

TEST(Estimator, SigmaMonotoneAndAboveQuadraticMinorant) {
  const auto prob = quad1_problem();
  const SigmaFn sigma = make_sigma_fn(prob, 5.0 / 3.0, EstimatorOptions{});
  const double mu = 1.0, Lambda0 = 43.0 / 18.0;
  double prev = sigma(0.0);
  for (double r = 0.25; r <= 32.0; r += 0.25) {
    const double s = sigma(r);
    EXPECT_GE(s, prev - 1e-12);
    EXPECT_GE(s, 0.5 * mu * r * r - Lambda0 - 1e-12);
    prev = s;
  }
}

TEST(Estimator, SelectT0Admissibility) {
  // sigma(r) = r, c = 1, delta/xi = 5: beta = 2/T0 > 5 requires T0 < 0.4.
  const SigmaFn linear = [](double r) { return r; };
  auto ell_trivial = [](double, double beta) { return beta; };
  EstimatorOptions opts;
  const auto sel = select_T0_beta(linear, 1.0, 5.0, ell_trivial, opts);
  EXPECT_LT(sel.T0, 0.4);
  EXPECT_GT(sel.beta, 5.0);

  EstimatorOptions coarse = opts;
  coarse.t0_min = 0.5;  // grid misses the admissible region entirely
  EXPECT_THROW(select_T0_beta(linear, 1.0, 5.0, ell_trivial, coarse), RangeError);

  const SigmaFn zero = [](double) { return 0.0; };
  EXPECT_THROW(select_T0_beta(zero, 1.0, 0.0, ell_trivial, opts), RangeError);
}

TEST(Estimator, SelectT0MinimizesEll) {
  const auto prob = quad1_problem();
  const EstimatorOptions opts;
  const SigmaFn sigma = make_sigma_fn(prob, 5.0 / 3.0, opts);
  // ell surrogate with a known interior minimizer at T0 ~ 0.5.
  auto ell_of = [](double T0, double) { return (T0 - 0.5) * (T0 - 0.5); };
  const auto sel = select_T0_beta(sigma, 5.0 / 3.0, 0.0, ell_of, opts);
  EXPECT_NEAR(sel.T0, 0.5, 0.02);
}

TEST(Estimator, EtaClosedForms) {
  EXPECT_NEAR(compute_eta(affine_power(1.0, 0.5, 2.0), 0.0).value, 1.0 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(compute_eta(affine_power(1.0, 0.5, 2.0), 3.0).value, 1.0 / std::sqrt(8.0), 1e-14);
  for (double beta : {0.7, 2.0, 9.0})
    EXPECT_NEAR(compute_eta(affine_power(0.0, 1.0, 2.0), beta).value,
                1.0 / (2.0 * std::sqrt(beta)), 1e-13);
}

TEST(Estimator, EtaGridMatchesAnalytic) {
  EstimatorOptions grid_opts;
  grid_opts.use_analytic = false;
  for (double beta : {0.0, 1.3, 6.0}) {
    const auto theta = affine_power(1.0, 0.5, 2.0);
    const double analytic = compute_eta(theta, beta).value;
    const auto grid = compute_eta(theta, beta, grid_opts);
    EXPECT_EQ(grid.prov.method, "grid");
    EXPECT_NEAR(grid.value, analytic, 1e-9 * analytic);
  }
}

TEST(Estimator, EtaGridRejectsSublinearTheta) {
  // r / (ln(1+r) + beta) grows without bound: the scan must not return a
  // finite "supremum".
  CoercivityFn logt;
  logt.family = "log1p";
  EstimatorOptions grid_opts;
  grid_opts.use_analytic = false;
  EXPECT_THROW(compute_eta(logt, 1.0, grid_opts), RangeError);
}

TEST(Estimator, VarrhoClosedForm) {
  EXPECT_THROW(compute_varrho(1.0, 0.0, 0.0, 0.0, 0.0), ConfigError);
  EXPECT_NEAR(compute_varrho(2.0, 1.0, 0.0, 1.0, 1.0).value, 2.0, 1e-8);
}

TEST(Estimator, VarrhoThresholdIsSharp) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto rh_holds = [](double r, double mu, double L0, double L1, double L2, double beta) {
    const double denom = 0.5 * mu * r * r - L1 * r - L0 + beta;
    return denom > 0.0 && r / denom < 1.0 / (L2 + beta);
  };
  for (int rep = 0; rep < 200; ++rep) {
    const double mu = 0.2 + 2.8 * unif(rng);
    const double L0 = 0.5 + 2.5 * unif(rng);
    const double L1 = 2.0 * unif(rng);
    const double L2 = 0.1 + 4.9 * unif(rng);
    const double beta = 0.5 * unif(rng) * L0;  // keep beta <= Lambda0
    const double rho = compute_varrho(mu, L0, L1, L2, beta).value;
    ASSERT_GT(rho, 0.0);
    EXPECT_TRUE(rh_holds(rho * (1.0 + 1e-6), mu, L0, L1, L2, beta));
    EXPECT_FALSE(rh_holds(rho * (1.0 - 1e-3), mu, L0, L1, L2, beta));
    // And it keeps holding further out.
    for (double f : {1.5, 4.0, 64.0})
      EXPECT_TRUE(rh_holds(rho * f, mu, L0, L1, L2, beta));
  }
}

TEST(Estimator, EllFormula) {
  EXPECT_DOUBLE_EQ(compute_ell(5.0, 1.0, 0.0, 0.0, 0.0).value, 5.0);
  EXPECT_DOUBLE_EQ(compute_ell(0.0, 2.0, 4.0, 0.0, 0.0).value, std::sqrt(8.0));
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unif(0.0, 4.0);
  for (int rep = 0; rep < 200; ++rep) {
    const double rho = unif(rng), mu = 0.1 + unif(rng), L0 = unif(rng), L1 = unif(rng);
    const double b1 = unif(rng), b2 = b1 + unif(rng);
    EXPECT_GE(compute_ell(rho, mu, L0, L1, b2).value, compute_ell(rho, mu, L0, L1, b1).value);
  }
}

TEST(Estimator, KLClosedFormAndGrid) {
  LagrangianSpec quad1 = quad1_problem().lagrangian;
  EXPECT_NEAR(compute_KL(quad1, 2.0).value, std::sqrt(8.0), 1e-14);

  LagrangianSpec flat = quad1;
  flat.params = Vec(3);
  flat.params << 1.0, 0.0, 0.0;
  EXPECT_DOUBLE_EQ(compute_KL(flat, 2.0).value, 0.0);

  EstimatorOptions grid_opts;
  grid_opts.use_analytic = false;
  const double grid = compute_KL(quad1, 2.0, grid_opts).value;
  EXPECT_GE(grid, std::sqrt(8.0) - 1e-9);
  EXPECT_LE(grid, std::sqrt(8.0) * 1.05 + 1e-9);

  double prev = 0.0;
  for (double ell : {0.5, 1.0, 2.0, 7.0}) {
    const double k = compute_KL(quad1, ell).value;
    EXPECT_GE(k, prev);
    prev = k;
  }
}

TEST(Estimator, SigmaBarFormula) {
  LagrangianSpec quad1 = quad1_problem().lagrangian;
  EXPECT_NEAR(compute_sigma_bar(quad1, std::sqrt(8.0), 2.0).value,
              1.0 + 5.0 * std::sqrt(8.0), 1e-12);
  EXPECT_DOUBLE_EQ(compute_sigma_bar(quad1, 0.0, 2.0).value, 1.0);
}

TEST(Estimator, SigmaBarDominatesObjectiveOnBallControls) {
  const auto prob = quad1_problem();
  const auto rc = compute_all(prob);
  const auto quad = QuadratureRule::gauss_legendre(5);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    PiecewiseConstantControl u;
    u.N = 16;
    u.values = Mat(16, 1);
    for (int k = 0; k < 16; ++k) u.values(k, 0) = rc.ell.value * unif(rng);
    EXPECT_LE(objective_P(u, prob.lagrangian, quad), rc.sigma_bar.value);
  }
}

TEST(Estimator, FullChainOnBenchmark) {
  const auto prob = quad1_problem();
  const auto rc = compute_all(prob);
  EXPECT_NEAR(rc.r0.value, 0.0, 1e-9);
  EXPECT_NEAR(rc.c.value, 5.0 / 3.0, 1e-9);
  EXPECT_NEAR(rc.Lambda0.value, 43.0 / 18.0, 1e-9);
  EXPECT_NEAR(rc.Lambda1.value, 0.0, 1e-9);
  EXPECT_GT(rc.beta.value, 0.0);  // beta > delta/xi = 0
  EXPECT_GT(rc.T0.value, 0.0);
  EXPECT_LT(rc.T0.value, 1.0);
  EXPECT_NEAR(rc.gamma_bar.value,
              std::exp(rc.eta.value * 1.0 * (rc.c.value + rc.T0.value * rc.beta.value)),
              1e-12 * rc.gamma_bar.value);
  // ell is exactly the max of its three closed-form terms.
  const double t2 = std::sqrt(2.0 * (rc.Lambda0.value + rc.beta.value));
  const double t3 = 0.5 * std::sqrt(4.0 * rc.Lambda0.value);
  EXPECT_DOUBLE_EQ(rc.ell.value, std::max(rc.varrho.value, std::max(t2, t3)));
  // The reference's max velocity coth(1) respects the bound.
  EXPECT_LE(1.0 / std::tanh(1.0), rc.ell.value);
  std::cout << "benchmark chain: beta=" << rc.beta.value << " T0=" << rc.T0.value
            << " eta=" << rc.eta.value << " gamma_bar=" << rc.gamma_bar.value
            << " Lambda2=" << rc.Lambda2.value << " varrho=" << rc.varrho.value
            << " ell=" << rc.ell.value << " K_L=" << rc.K_L.value
            << " sigma_bar=" << rc.sigma_bar.value << std::endl;
}

TEST(Estimator, ChainIsDeterministic) {
  const auto prob = quad1_problem();
  const auto a = compute_all(prob);
  const auto b = compute_all(prob);
  EXPECT_EQ(a.ell.value, b.ell.value);
  EXPECT_EQ(a.sigma_bar.value, b.sigma_bar.value);
  EXPECT_EQ(a.beta.value, b.beta.value);
  EXPECT_EQ(a.K_L.value, b.K_L.value);
}

TEST(Estimator, GridRefinementStaysWithinSafetyFactor) {
  // A 2-d quadratic with a time-dependent linear term has no registered
  // closed forms, so the grid route is the real path here.
  LagrangianSpec L;
  L.family = "quad";
  L.n = 2;
  L.params = Vec(1 + 8 + 4);
  L.params << 1.0, 2.0, 0.5, 0.5, 1.0, 1.0, -0.25, -0.25, 1.5, 0.1, -0.2, 0.3, 0.0;
  EstimatorOptions coarse;
  coarse.use_analytic = false;
  coarse.omega_grid = 9;
  coarse.u_grid = 9;
  EstimatorOptions fine = coarse;
  fine.omega_grid = 18;
  fine.u_grid = 18;
  const ResolvedLagrangian rl = resolve(L);
  auto value = [&](const EstimatorOptions& o) {
    return max_over_omega(
        [&](double t, const Vec& x, const Vec& u) { return eval(rl, t, x, u); }, 2, 1.5,
        UDomain::ball(2.0), o);
  };
  const double v_coarse = value(coarse), v_fine = value(fine);
  EXPECT_LE(v_coarse / v_fine, 1.05);
  EXPECT_GE(v_coarse / v_fine, 1.0 / 1.05);
  coarse.omega_grid = coarse.u_grid = 7;
  fine.omega_grid = fine.u_grid = 14;
  const double kl_coarse = compute_KL(L, 2.0, coarse).value;
  const double kl_fine = compute_KL(L, 2.0, fine).value;
  EXPECT_LE(kl_coarse / kl_fine, 1.05);
  EXPECT_GE(kl_coarse / kl_fine, 1.0 / 1.05);
}

TEST(Estimator, QuadraticMinorantHoldsOnSamples) {
  const auto prob = quad1_problem();
  const auto rc = compute_all(prob);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  int violations = 0;
  for (int s = 0; s < 1000; ++s) {
    const double t = unit(rng);
    const Vec x = Vec::Constant(1, rc.c.value * sym(rng));
    const Vec u = Vec::Constant(1, 10.0 * rc.ell.value * sym(rng));
    const double lhs = -rc.Lambda0.value - rc.Lambda1.value * u.norm() +
                       0.5 * prob.reg.mu * u.squaredNorm();
    if (lhs > eval(prob.lagrangian, t, x, u) + 1e-9) ++violations;
  }
  EXPECT_EQ(violations, 0);
}
