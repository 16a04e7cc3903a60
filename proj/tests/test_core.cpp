#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "stream_ot/core.hpp"
#include "stream_ot/discrete_sinkhorn.hpp"
#include "stream_ot/error.hpp"
#include "test_util.hpp"

namespace stream_ot {
namespace {

using testing::line;
using testing::naive_potential;

const CostSpec cost1{CostKind::squared_euclidean, 1};

TEST(Cost, SymmetricNonnegative) {
  Rng rng(3);
  const CostSpec c{CostKind::squared_euclidean, 3};
  for (int i = 0; i < 100; ++i) {
    const auto p = testing::uniform_points(2, 3, -5, 5, rng);
    EXPECT_GE(c(p[0], p[1]), 0.0);
    EXPECT_EQ(c(p[0], p[1]), c(p[1], p[0]));
  }
}

TEST(Cost, LipschitzOnBox) {
  const Box box{{0.0, 0.0}, {3.0, 4.0}};
  const CostSpec c2{CostKind::squared_euclidean, 2};
  EXPECT_DOUBLE_EQ(c2.lipschitz_on(box), 10.0);
}

TEST(Cost, OnlySquaredEuclideanAccepted) {
  EXPECT_NO_THROW(parse_cost("squared_euclidean", 2));
  EXPECT_THROW(parse_cost("l1", 2), Error);
}

TEST(Potential, SingleAtomAtItsLocationIsZero) {
  const Potential p(1.0, cost1, line({2.5}), {0.0});
  EXPECT_EQ(p(line({2.5}))[0], 0.0);
}

TEST(Potential, TwoAtomValue) {
  const Potential p(1.0, cost1, line({0.0, 1.0}), {0.0, 0.0});
  const double oracle = -std::log(std::exp(0.0) + std::exp(-1.0));
  EXPECT_NEAR(oracle, -0.31326168751822286, 1e-15);
  EXPECT_NEAR(p(line({0.0}))[0], oracle, 1e-15);
}

TEST(Potential, EmptyIsRejected) {
  const Potential p(1.0, cost1, PointSet(1), {});
  try {
    p(line({0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_representation);
  }
}

TEST(Potential, MatchesDirectEvaluation) {
  Rng rng(11);
  const auto atoms = testing::uniform_points(50, 2, -3, 3, rng);
  std::vector<double> q(50);
  for (double& v : q) v = 4.0 * rng.normal();
  const Potential p(0.5, CostSpec{CostKind::squared_euclidean, 2}, atoms, q);
  const auto xs = testing::uniform_points(20, 2, -4, 4, rng);
  const auto vals = p(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(vals[i], naive_potential(atoms, q, 0.5, xs[i]), 1e-12 * (1 + std::abs(vals[i])));
  }
}

TEST(Potential, TranslationCovariance) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto atoms = testing::uniform_points(30, 1, -2, 2, rng);
    std::vector<double> q(30);
    for (double& v : q) v = rng.normal();
    const double eps = 0.1 + rng.uniform();
    const double c = 10.0 * rng.normal();
    Potential p(eps, cost1, atoms, q);
    const auto xs = testing::uniform_points(10, 1, -3, 3, rng);
    const auto before = p(xs);
    p.shift_weights(c);
    const auto after = p(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      EXPECT_NEAR(after[i], before[i] - c, 1e-12 * (std::abs(before[i]) + std::abs(c)));
    }
  }
}

TEST(Potential, StableUnderHugeShifts) {
  Rng rng(8);
  const double eps = 0.3;
  const auto atoms = testing::uniform_points(40, 1, -2, 2, rng);
  std::vector<double> q(40);
  for (double& v : q) v = rng.normal();
  const auto xs = testing::uniform_points(10, 1, -2, 2, rng);
  const auto base = Potential(eps, cost1, atoms, q)(xs);
  for (double shift : {1e4 * eps, -1e4 * eps}) {
    Potential p(eps, cost1, atoms, q);
    p.shift_weights(shift);
    const auto v = p(xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double expected = base[i] - shift;
      EXPECT_TRUE(std::isfinite(v[i]));
      EXPECT_NEAR(v[i], expected, 1e-9 * std::abs(expected));
    }
  }
}

TEST(SoftCTransform, DiracGivesCostMinusH) {
  const WeightedMeasure mu{line({1.5}), {1.0}};
  const auto xs = line({-1.0, 0.0, 2.0});
  const auto out = soft_c_transform(std::vector<double>{0.7}, mu, cost1, 0.4, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double expected = (xs[i][0] - 1.5) * (xs[i][0] - 1.5) - 0.7;
    EXPECT_NEAR(out[i], expected, 1e-14);
  }
}

TEST(SoftCTransform, UniformTwoPoints) {
  const WeightedMeasure mu{line({0.0, 1.0}), {0.5, 0.5}};
  const auto out = soft_c_transform(std::vector<double>{0.0, 0.0}, mu, cost1, 1.0, line({0.0}));
  const double oracle = -std::log((1.0 + std::exp(-1.0)) / 2.0);
  EXPECT_NEAR(oracle, 0.37988549304172248, 1e-15);
  EXPECT_NEAR(out[0], oracle, 1e-15);
}

TEST(SoftCTransform, ConstantShiftFactorsOut) {
  Rng rng(2);
  const auto ys = testing::uniform_points(25, 1, -1, 1, rng);
  const WeightedMeasure mu{ys, std::vector<double>(25, 1.0 / 25)};
  std::vector<double> h1(25), h2(25);
  for (std::size_t i = 0; i < 25; ++i) {
    h1[i] = rng.normal();
    h2[i] = h1[i] + 2.5;
  }
  const auto xs = testing::uniform_points(12, 1, -1, 1, rng);
  const auto a = soft_c_transform(h1, mu, cost1, 0.2, xs);
  const auto b = soft_c_transform(h2, mu, cost1, 0.2, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(b[i], a[i] - 2.5, 1e-12);
}

TEST(SoftCTransform, MisalignedInputsRejected) {
  const WeightedMeasure mu{line({0.0, 1.0}), {0.5, 0.5}};
  try {
    soft_c_transform(std::vector<double>{0.0}, mu, cost1, 1.0, line({0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::alignment);
  }
}

// Random pairs of functions on a random measure in a bounded box.
class SoftCProperties : public ::testing::TestWithParam<int> {};

TEST_P(SoftCProperties, NonExpansiveAndVarContracting) {
  Rng rng(100 + static_cast<std::uint64_t>(GetParam()));
  const std::size_t d = 1 + static_cast<std::size_t>(GetParam() % 3);
  const CostSpec cost{CostKind::squared_euclidean, d};
  const std::size_t n = 40;
  const auto ys = testing::uniform_points(n, d, 0, 1, rng);
  std::vector<double> w(n);
  for (double& v : w) v = rng.uniform() + 0.05;
  const WeightedMeasure mu{ys, w};
  std::vector<double> h1(n), h2(n);
  for (std::size_t i = 0; i < n; ++i) {
    h1[i] = rng.normal();
    h2[i] = h1[i] + 0.5 * rng.normal();
  }
  const double eps = 0.05 + 0.5 * rng.uniform();
  const auto xs = testing::uniform_points(64, d, 0, 1, rng);
  const auto t1 = soft_c_transform(h1, mu, cost, eps, xs);
  const auto t2 = soft_c_transform(h2, mu, cost, eps, xs);
  std::vector<double> dh(n), dt(xs.size());
  for (std::size_t i = 0; i < n; ++i) dh[i] = h1[i] - h2[i];
  for (std::size_t i = 0; i < xs.size(); ++i) dt[i] = t1[i] - t2[i];
  double sup_h = 0.0, sup_t = 0.0;
  for (double v : dh) sup_h = std::max(sup_h, std::abs(v));
  for (double v : dt) sup_t = std::max(sup_t, std::abs(v));
  EXPECT_LE(sup_t, sup_h + 1e-12);
  const double kappa = variational_norm(dt) / variational_norm(dh);
  EXPECT_LE(kappa, 1.0 + 1e-12);
  // On a bounded box the contraction is strict.
  EXPECT_LT(kappa, 1.0);
  RecordProperty("kappa", std::to_string(kappa));
}

INSTANTIATE_TEST_SUITE_P(Random, SoftCProperties, ::testing::Range(0, 12));

TEST(SoftCTransform, SlopesBoundedByCostLipschitz) {
  Rng rng(21);
  const auto ys = testing::uniform_points(30, 1, -2, 2, rng);
  const WeightedMeasure mu{ys, std::vector<double>(30, 1.0 / 30)};
  std::vector<double> h(30);
  for (double& v : h) v = 3.0 * rng.normal();
  std::vector<double> grid(801);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -2.0 + 4.0 * static_cast<double>(i) / 800.0;
  const double diameter = 4.0;
  for (double eps : {0.01, 0.1, 1.0}) {
    const auto v = soft_c_transform(h, mu, cost1, eps, line(grid));
    double worst = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      worst = std::max(worst, std::abs(v[i] - v[i - 1]) / (grid[i] - grid[i - 1]));
    }
    EXPECT_LE(worst, 2.0 * diameter * (1.0 + 1e-6)) << "eps " << eps;
  }
}

TEST(VariationalNorm, Examples) {
  EXPECT_EQ(variational_norm(std::vector<double>{2.0, 2.0, 2.0}), 0.0);
  EXPECT_EQ(variational_norm(std::vector<double>{1.0, 4.0, 2.0}), 3.0);
  EXPECT_EQ(variational_norm(std::vector<double>{1.0, 4.0, 2.0}),
            variational_norm(std::vector<double>{11.0, 14.0, 12.0}));
  EXPECT_THROW(variational_norm(std::vector<double>{}), Error);
}

TEST(DualObjective, CoLocatedZeroPotentials) {
  DualPair pair{Potential(1.0, cost1, line({0.0}), {0.0}), Potential(1.0, cost1, line({0.0}), {0.0})};
  const auto x = line({0.0});
  // f = g = 0 at the shared point and C = 0 there.
  EXPECT_NEAR(dual_objective(std::vector<double>{0.0}, std::vector<double>{0.0}, x, x, cost1, 1.0), -1.0,
              1e-15);
  EXPECT_NEAR(dual_objective(pair, x, x), -1.0, 1e-15);
}

TEST(DualObjective, DiscreteOptimumAndPerturbation) {
  Rng rng(16);
  DiscreteProblem prob{testing::uniform_points(16, 1, -1, 2, rng), testing::uniform_points(16, 1, 0, 3, rng),
                       0.5, cost1};
  const auto sol = sinkhorn_solve(prob, 1e-13, 100000);
  ASSERT_TRUE(sol.converged);
  const double at_opt = dual_objective(sol.f, sol.g, prob.xs, prob.ys, cost1, prob.epsilon);
  // Independent value: mean f + mean g - eps, since the plan has unit mass.
  double oracle = -prob.epsilon;
  for (std::size_t i = 0; i < 16; ++i) oracle += (sol.f[i] + sol.g[i]) / 16.0;
  EXPECT_NEAR(at_opt, sol.dual_value, 1e-8);
  EXPECT_NEAR(at_opt, oracle, 1e-8);

  auto f_bumped = sol.f;
  f_bumped[3] += 0.1;
  EXPECT_LT(dual_objective(f_bumped, sol.g, prob.xs, prob.ys, cost1, prob.epsilon), at_opt);
  auto f_dented = sol.f;
  f_dented[3] -= 0.1;
  EXPECT_LT(dual_objective(f_dented, sol.g, prob.xs, prob.ys, cost1, prob.epsilon), at_opt);
}

}  // namespace
}  // namespace stream_ot
