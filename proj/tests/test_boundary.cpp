#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <thread>

#include "dopt/boundary.hpp"
#include "oracle.hpp"

using namespace dopt;

namespace {

Eigen::MatrixXd five_point_matrix(double a, double b) {
  Eigen::MatrixXd X(5, 3);
  for (int i = 0; i < 4; ++i) X.row(i) << 1.0, kCorners[static_cast<std::size_t>(i)][0], kCorners[static_cast<std::size_t>(i)][1];
  X.row(4) << 1.0, a, b;
  return X;
}

ContinuousProblem logit_square(double b0, double b1, double b2) {
  return ContinuousProblem({b0, b1, b2}, {}, WeightFunction::logit());
}

}  // namespace

TEST(Rescale, UnitSquareIsIdentity) {
  const ContinuousProblem cp({0.3, -1.2, 0.7}, {}, WeightFunction::logit());
  const auto [unit, tr] = rescale_problem(cp);
  EXPECT_EQ(unit.beta, cp.beta);
  EXPECT_EQ(tr.det_T(), 1.0);
  EXPECT_TRUE(is_unit_square(unit.bounds));
}

TEST(Rescale, ShiftedRectangle) {
  const ContinuousProblem cp({1.0, 1.0, 1.0}, {0.0, 2.0, 0.0, 4.0}, WeightFunction::logit());
  const auto [unit, tr] = rescale_problem(cp);
  EXPECT_EQ(unit.beta, (std::array<double, 3>{4.0, 1.0, 2.0}));
  EXPECT_DOUBLE_EQ(tr.det_T(), 0.5);
  const auto x = tr.to_original(1.0, -1.0);
  EXPECT_EQ(x, (std::array<double, 2>{2.0, 0.0}));
}

TEST(Rescale, LinearPredictorIsInvariant) {
  app::Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const double a1 = rng.uniform(-5, 5), a2 = rng.uniform(-5, 5);
    const ContinuousProblem cp({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)},
                               {a1, a1 + rng.uniform(0.1, 4), a2, a2 + rng.uniform(0.1, 4)}, WeightFunction::logit());
    const auto [unit, tr] = rescale_problem(cp);
    for (int k = 0; k < 20; ++k) {
      const double x1 = rng.uniform(cp.bounds.a1, cp.bounds.b1), x2 = rng.uniform(cp.bounds.a2, cp.bounds.b2);
      const auto u = tr.to_unit(x1, x2);
      EXPECT_NEAR(cp.eta(x1, x2), unit.eta(u[0], u[1]), 1e-12);
    }
  }
}

TEST(Rescale, BadBoundsRejected) {
  EXPECT_THROW(ContinuousProblem({0, 0, 0}, {1.0, 1.0, -1.0, 1.0}, WeightFunction::logit()), DomainError);
  EXPECT_THROW(ContinuousProblem({NAN, 0, 0}, {}, WeightFunction::logit()), DomainError);
}

TEST(Rescale, DeterminantScalesWithTSquared) {
  app::Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const double a1 = rng.uniform(-3, 3), a2 = rng.uniform(-3, 3);
    const ContinuousProblem cp({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)},
                               {a1, a1 + rng.uniform(0.2, 3), a2, a2 + rng.uniform(0.2, 3)}, WeightFunction::logit());
    const auto [unit, tr] = rescale_problem(cp);
    const auto w = corner_weights(unit);
    const auto p4 = solve_22({1 / w[0], 1 / w[1], 1 / w[2], 1 / w[3]}).allocation;
    Eigen::MatrixXd Xo(4, 3);
    Eigen::Vector4d wo;
    for (int i = 0; i < 4; ++i) {
      const auto x = tr.to_original(kCorners[static_cast<std::size_t>(i)][0], kCorners[static_cast<std::size_t>(i)][1]);
      Xo.row(i) << 1.0, x[0], x[1];
      wo(i) = cp.weight_fn(cp.eta(x[0], x[1]));
    }
    const double original = objective_det(DesignProblem::from_weights(Xo, wo), p4);
    const double t = tr.det_T();
    EXPECT_LE(oracle::rel_diff(corner_objective(p4, w), t * t * original), 1e-10);
  }
}

TEST(Hab, ConstantGroupAtOrigin) {
  const double w = 0.37;
  const std::array<double, 4> ws{w, w, w, w};
  EXPECT_NEAR(h_ab(0.0, 0.0, Allocation::uniform(4), ws), w * w / 4.0, 1e-17);
  const Allocation p({0.4, 0.3, 0.2, 0.1});
  const std::array<double, 4> wv{1.0, 2.0, 3.0, 4.0};
  const double expected = 0.4 * 0.3 * 1 * 2 + 0.4 * 0.2 * 1 * 3 + 0.3 * 0.1 * 2 * 4 + 0.2 * 0.1 * 3 * 4;
  EXPECT_NEAR(h_ab(0.0, 0.0, p, wv), expected, 1e-15);
}

TEST(Hab, PointSymmetry) {
  app::Rng rng(63);
  for (int trial = 0; trial < 200; ++trial) {
    const double wa = rng.uniform(0.1, 1), wb = rng.uniform(0.1, 1);
    const double pa = rng.uniform(0.1, 0.4);
    const Allocation p({pa, 0.5 - pa, 0.5 - pa, pa});
    const std::array<double, 4> w{wa, wb, wb, wa};
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    EXPECT_NEAR(h_ab(a, b, p, w), h_ab(-a, -b, p, w), 1e-14);
  }
}

TEST(FivePoint, ExpansionCoefficients) {
  app::Rng rng(64);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    const auto terms = objective_expansion(DesignProblem::from_weights(five_point_matrix(a, b), Eigen::VectorXd::Ones(5)));
    const std::map<std::pair<std::size_t, std::size_t>, double> mixed{
        {{0, 1}, 4 * (1 - a) * (1 - a)}, {{0, 2}, 4 * (1 - b) * (1 - b)}, {{0, 3}, 4 * (a - b) * (a - b)},
        {{1, 2}, 4 * (a + b) * (a + b)}, {{1, 3}, 4 * (1 + b) * (1 + b)}, {{2, 3}, 4 * (1 + a) * (1 + a)}};
    ASSERT_EQ(terms.size(), 10U);
    for (const auto& t : terms) {
      if (t.rows[2] == 4) {
        EXPECT_NEAR(t.coefficient, mixed.at({t.rows[0], t.rows[1]}), 1e-10);
      } else {
        EXPECT_NEAR(t.coefficient, 16.0, 1e-10);
      }
    }
  }
}

TEST(FivePoint, HalvingIdentity) {
  app::Rng rng(65);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    const auto praw = oracle::random_simplex(rng, 4);
    const Allocation p4(praw);
    const std::array<double, 4> w{rng.uniform(0.01, 1), rng.uniform(0.01, 1), rng.uniform(0.01, 1), rng.uniform(0.01, 1)};
    const double w5 = rng.uniform(0.01, 1);
    const auto pr = DesignProblem::from_weights(five_point_matrix(a, b), Eigen::VectorXd{{w[0], w[1], w[2], w[3], w5}});
    const double f50 = objective_det(pr, Allocation({praw[0], praw[1], praw[2], praw[3], 0.0}));
    const double f5h = objective_det(pr, Allocation({praw[0] / 2, praw[1] / 2, praw[2] / 2, praw[3] / 2, 0.5}));
    const double lhs = f50 - 2 * f5h;
    const double rhs = 0.75 * f50 - w5 * h_ab(a, b, p4, w);
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max({std::abs(lhs), f50, 1e-300}));
    EXPECT_LE(oracle::rel_diff(f50, corner_objective(p4, w)), 1e-12);
  }
}

TEST(Verdict, ConstantWeightAlwaysCornerOptimal) {
  app::Rng rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    const ContinuousProblem cp({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)}, {},
                               WeightFunction::identity_constant(rng.uniform(0.5, 2)));
    const auto v = check_boundary_optimal(cp);
    EXPECT_TRUE(v.boundary_optimal) << v.min_s;
    for (double p : v.p4.p) EXPECT_DOUBLE_EQ(p, 0.25);
  }
}

TEST(Verdict, SymmetricLogit) {
  const auto v = check_boundary_optimal(logit_square(-1, 0, 0));
  EXPECT_TRUE(v.boundary_optimal);
  EXPECT_GE(v.min_s, -v.tol_s);
  EXPECT_DOUBLE_EQ(v.tol_s, 1e-10 * v.f_p4);
}

TEST(Verdict, CornersNeverViolate) {
  app::Rng rng(67);
  for (int trial = 0; trial < 300; ++trial) {
    const auto cp = logit_square(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const auto w = corner_weights(cp);
    const auto p4 = solve_22({1 / w[0], 1 / w[1], 1 / w[2], 1 / w[3]}).allocation;
    const BoundaryScore s(cp, p4, w);
    for (const auto& c : kCorners) EXPECT_GE(s(c[0], c[1]), -1e-10 * s.f_p4());
  }
}

TEST(Verdict, InvariantUnderCornerRelabelling) {
  app::Rng rng(68);
  BoundaryConfig config;
  config.grid_steps = 101;
  for (int trial = 0; trial < 30; ++trial) {
    const double b0 = rng.uniform(-2, 2), b1 = rng.uniform(-2, 2), b2 = rng.uniform(-2, 2);
    const auto base = check_boundary_optimal(logit_square(b0, b1, b2), config);
    const std::array<std::array<double, 3>, 4> images{
        {{b0, -b1, b2}, {b0, b1, -b2}, {b0, b2, b1}, {-b0, b1, b2}}};
    for (const auto& beta : images) {
      const auto v = check_boundary_optimal(logit_square(beta[0], beta[1], beta[2]), config);
      EXPECT_NEAR(v.min_s, base.min_s, 1e-8 * base.f_p4);
      if (std::abs(base.min_s) > 1e-6 * base.f_p4) {
        EXPECT_EQ(v.boundary_optimal, base.boundary_optimal);
      }
    }
  }
}

TEST(Verdict, ConfigValidation) {
  BoundaryConfig config;
  config.grid_steps = 1;
  EXPECT_THROW(check_boundary_optimal(logit_square(-1, 0, 0), config), DomainError);
}

TEST(GridAxisTest, SymmetricNodes) {
  const GridAxis axis{-2.0, 2.0, 41};
  EXPECT_EQ(axis.value(0), -2.0);
  EXPECT_EQ(axis.value(40), 2.0);
  EXPECT_EQ(axis.value(20), 0.0);
  for (int i = 0; i < 41; ++i) EXPECT_EQ(axis.value(i), -axis.value(40 - i));
  EXPECT_EQ((GridAxis{-1.0, 3.0, 1}.value(0)), 1.0);
}

class LogitRegion : public ::testing::Test {
 protected:
  static unsigned threads() { return std::max(1U, std::thread::hardware_concurrency()); }
};

TEST_F(LogitRegion, FigureTwoProperties) {
  const GridAxis axis{-2.0, 2.0, 41};
  const auto grid = region_sweep(-1.0, axis, axis, WeightFunction::logit(), {}, threads());
  ASSERT_EQ(grid.nodes.size(), 41U * 41U);
  std::size_t count = 0;
  for (int i = 0; i < 41; ++i) {
    for (int j = 0; j < 41; ++j) {
      const auto& n = grid.at(i, j);
      ASSERT_TRUE(n.ok);
      count += n.verdict ? 1 : 0;
      EXPECT_EQ(n.verdict, grid.at(j, i).verdict) << i << "," << j;
      EXPECT_EQ(n.verdict, grid.at(40 - i, j).verdict) << i << "," << j;
      EXPECT_EQ(n.verdict, grid.at(i, 40 - j).verdict) << i << "," << j;
    }
  }
  EXPECT_GT(count, 0U);
  EXPECT_LT(count, 41U * 41U);
  EXPECT_TRUE(grid.at(20, 20).verdict);
  EXPECT_FALSE(region_boundary(grid).empty());

  BoundaryConfig dense;
  dense.grid_steps = 401;
  const auto fine = region_sweep(-1.0, axis, axis, WeightFunction::logit(), dense, threads());
  for (std::size_t k = 0; k < grid.nodes.size(); ++k) EXPECT_EQ(grid.nodes[k].verdict, fine.nodes[k].verdict) << k;
}

TEST_F(LogitRegion, ThreadCountDoesNotChangeResults) {
  const GridAxis axis{-2.0, 2.0, 9};
  const auto one = region_sweep(-1.0, axis, axis, WeightFunction::logit(), {}, 1);
  const auto many = region_sweep(-1.0, axis, axis, WeightFunction::logit(), {}, 4);
  for (std::size_t k = 0; k < one.nodes.size(); ++k) {
    EXPECT_EQ(one.nodes[k].min_s, many.nodes[k].min_s);
    EXPECT_EQ(one.nodes[k].verdict, many.nodes[k].verdict);
  }
}

TEST_F(LogitRegion, ShallowInterceptSplitsRegion) {
  const GridAxis axis{-2.0, 2.0, 81};
  const auto grid = region_sweep(-0.5, axis, axis, WeightFunction::logit(), {}, threads());
  EXPECT_GE(count_region_pieces(grid), 2U);
}

TEST_F(LogitRegion, MinSIsContinuousAlongALine) {
  const GridAxis line{-2.0, 2.0, 401};
  const GridAxis fixed{0.5, 0.5, 1};
  const auto grid = region_sweep(-1.0, line, fixed, WeightFunction::logit(), {}, threads());
  double max_jump = 0.0, max_abs = 0.0;
  for (int i = 0; i + 1 < 401; ++i) {
    max_jump = std::max(max_jump, std::abs(grid.at(i + 1, 0).min_s - grid.at(i, 0).min_s));
    max_abs = std::max(max_abs, std::abs(grid.at(i, 0).min_s));
  }
  EXPECT_LT(max_jump, 0.05 * max_abs);
}

TEST(RegionSweep, RejectsBadAxes) {
  EXPECT_THROW(region_sweep(0.0, {-1, 1, 0}, {-1, 1, 3}, WeightFunction::logit()), DomainError);
  EXPECT_THROW(region_sweep(0.0, {-1, INFINITY, 3}, {-1, 1, 3}, WeightFunction::logit()), DomainError);
}
