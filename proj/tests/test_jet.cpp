#include "varipath/jet.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace varipath;

TEST(Jet, LiftSeedsUnitGradients) {
  Vec p(1);
  p << 3.0;
  const auto jets = lift(p);
  ASSERT_EQ(jets.size(), 1u);
  EXPECT_DOUBLE_EQ(jets[0].val, 3.0);
  EXPECT_DOUBLE_EQ(jets[0].grad[0], 1.0);
  EXPECT_DOUBLE_EQ(jets[0].hess(0, 0), 0.0);

  Vec q(2);
  q << 1.0, 2.0;
  const auto j2 = lift(q);
  EXPECT_DOUBLE_EQ(j2[1].val, 2.0);
  EXPECT_DOUBLE_EQ(j2[1].grad[0], 0.0);
  EXPECT_DOUBLE_EQ(j2[1].grad[1], 1.0);
}

TEST(Jet, SumOfLiftsIsExactlyLinear) {
  Vec p(3);
  p << 0.5, -2.0, 4.0;
  const auto jets = lift(p);
  Jet2 s = jets[0] + jets[1] + jets[2];
  EXPECT_DOUBLE_EQ(s.val, 2.5);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s.grad[i], 1.0);
  EXPECT_DOUBLE_EQ(s.hess.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Jet, SquareHasConstantCurvature) {
  Vec p(1);
  p << 3.0;
  const auto x = lift(p)[0];
  const Jet2 f = x * x;
  EXPECT_DOUBLE_EQ(f.val, 9.0);
  EXPECT_DOUBLE_EQ(f.grad[0], 6.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 0), 2.0);
}

TEST(Jet, ProductCrossDerivatives) {
  Vec p(2);
  p << 2.0, 5.0;
  const auto jets = lift(p);
  const Jet2 f = jets[0] * jets[1];
  EXPECT_DOUBLE_EQ(f.val, 10.0);
  EXPECT_DOUBLE_EQ(f.grad[0], 5.0);
  EXPECT_DOUBLE_EQ(f.grad[1], 2.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(f.hess(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(f.hess(1, 1), 0.0);
}

TEST(Jet, ExpAtZero) {
  Vec p(1);
  p << 0.0;
  const Jet2 f = exp(lift(p)[0]);
  EXPECT_DOUBLE_EQ(f.val, 1.0);
  EXPECT_DOUBLE_EQ(f.grad[0], 1.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 0), 1.0);
}

TEST(Jet, DomainErrors) {
  Vec p(1);
  p << -1.0;
  const auto x = lift(p)[0];
  EXPECT_THROW(log(x), Error);
  EXPECT_THROW(sqrt(x), Error);
  EXPECT_THROW(1.0 / (x + 1.0), Error);
  EXPECT_THROW(pow(x, 2.0), Error);
}

TEST(Jet, PowAtZeroBaseThroughSquaredNorm) {
  // |u|^4 via (u^2)^2 must be smooth at u = 0.
  Vec p(1);
  p << 0.0;
  const auto u = lift(p)[0];
  const Jet2 f = pow(u * u, 2.0);
  EXPECT_DOUBLE_EQ(f.val, 0.0);
  EXPECT_DOUBLE_EQ(f.grad[0], 0.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 0), 0.0);
}

namespace {

// Random composition of the registered primitives, squashed after every step
// to keep all intermediate values inside the primitive domains.
Jet2 random_composition(const std::vector<Jet2>& vars, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick_var(0, static_cast<int>(vars.size()) - 1);
  std::uniform_int_distribution<int> pick_op(0, 6);
  Jet2 a = vars[pick_var(rng)];
  const int steps = 4 + static_cast<int>(rng() % 4);
  for (int s = 0; s < steps; ++s) {
    const Jet2& v = vars[pick_var(rng)];
    switch (pick_op(rng)) {
      case 0: a = a + v; break;
      case 1: a = a * v; break;
      case 2: a = a - v * 0.5; break;
      case 3: a = a / ((v * v) + 1.5); break;
      case 4: a = exp(a * 0.25); break;
      case 5: a = log((a * a) + 1.25); break;
      case 6: a = pow((a * a) + 0.75, 1.3); break;
    }
    a = 1.0 / ((a * a) + 1.0) + a * 0.125;  // squash
  }
  return a + sqrt((a * a) + 0.5);
}

}  // namespace

TEST(Jet, HessianSymmetryIsExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    Vec p(3);
    for (int i = 0; i < 3; ++i) p[i] = unif(rng);
    const Jet2 f = random_composition(lift(p), rng);
    EXPECT_EQ((f.hess - f.hess.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Jet, ChainRuleMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.5, 1.5);
  for (int rep = 0; rep < 100; ++rep) {
    Vec p(2);
    p << unif(rng), unif(rng);
    const std::uint64_t expr_seed = rng();
    auto f = [expr_seed](const std::vector<Jet2>& vars) {
      std::mt19937_64 local(expr_seed);
      return random_composition(vars, local);
    };
    const FdReport rep_fd = fd_check(f, p, 1e-5);
    EXPECT_LT(rep_fd.grad_err, 1e-6);
    EXPECT_LT(rep_fd.hess_err, 1e-6);
  }
}

TEST(Jet, FdCheckQuadraticIsExactUpToRoundoff) {
  auto f = [](const std::vector<Jet2>& v) {
    return v[0] * v[0] * 1.5 + v[0] * v[1] - v[1] * v[1] * 0.5 + v[0] * 3.0;
  };
  Vec p(2);
  p << 0.7, -1.3;
  const FdReport rep = fd_check(f, p, 1e-5);
  EXPECT_LT(rep.grad_err, 1e-8);
  EXPECT_LT(rep.hess_err, 1e-8);
}

TEST(Jet, FdCheckExpAtOne) {
  auto f = [](const std::vector<Jet2>& v) { return exp(v[0]); };
  Vec p(1);
  p << 1.0;
  const FdReport rep = fd_check(f, p, 1e-5);
  EXPECT_LT(rep.grad_err, 1e-6);
}

TEST(Jet, FdCheckRejectsEmptyPoint) {
  auto f = [](const std::vector<Jet2>& v) { return v[0]; };
  EXPECT_THROW(fd_check(f, Vec(), 1e-5), ConfigError);
}
