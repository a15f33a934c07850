#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "dopt/glm_core.hpp"
#include "oracle.hpp"

using namespace dopt;

namespace {

DesignProblem random_problem(app::Rng& rng, std::size_t n, std::size_t d) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index c = 1; c < X.cols(); ++c) X(i, c) = rng.uniform(-1.0, 1.0);
    w(i) = rng.uniform(0.05, 1.0);
  }
  return DesignProblem::from_weights(X, w);
}

Allocation random_allocation(app::Rng& rng, std::size_t n) { return Allocation(oracle::random_simplex(rng, n)); }

}  // namespace

TEST(WeightFunction, CatalogValues) {
  EXPECT_DOUBLE_EQ(weight_eval(WeightFunction::logit(), 0.0), 0.25);
  EXPECT_DOUBLE_EQ(weight_eval(WeightFunction::log_poisson(), 0.0), 1.0);
  EXPECT_NEAR(weight_eval(WeightFunction::logit(), 2.0), oracle::frozen::logit_at_2, 1e-16);
  EXPECT_NEAR(weight_eval(WeightFunction::probit(), 0.0), 2.0 / M_PI, 1e-15);
}

TEST(WeightFunction, NonFiniteEtaIsDomainError) {
  for (const auto& fn : {WeightFunction::logit(), WeightFunction::log_poisson(), WeightFunction::probit(),
                         WeightFunction::identity_constant(2.0)}) {
    EXPECT_THROW(fn(std::numeric_limits<double>::quiet_NaN()), DomainError);
    EXPECT_THROW(fn(INFINITY), DomainError);
  }
}

TEST(WeightFunction, PositiveSymmetricAndConstant) {
  const auto logit = WeightFunction::logit();
  const auto probit = WeightFunction::probit();
  const auto constant = WeightFunction::identity_constant(3.5);
  for (double eta = -30.0; eta <= 30.0; eta += 0.37) {
    EXPECT_GT(logit(eta), 0.0);
    EXPECT_GT(probit(eta), 0.0);
    EXPECT_DOUBLE_EQ(logit(eta), logit(-eta));
    EXPECT_NEAR(probit(eta), probit(-eta), 1e-12 * probit(eta));
    EXPECT_EQ(constant(eta), 3.5);
  }
  EXPECT_THROW(WeightFunction::identity_constant(0.0), DomainError);
}

TEST(WeightFunction, TabulatedInterpolatesAndClamps) {
  const auto fn = WeightFunction::tabulated({{-1.0, 1.0}, {0.0, 2.0}, {2.0, 4.0}});
  EXPECT_DOUBLE_EQ(fn(-0.5), 1.5);
  EXPECT_DOUBLE_EQ(fn(1.0), 3.0);
  EXPECT_DOUBLE_EQ(fn(-10.0), 1.0);
  EXPECT_DOUBLE_EQ(fn(10.0), 4.0);
  EXPECT_THROW(WeightFunction::tabulated({{0.0, 1.0}, {0.0, 2.0}}), DomainError);
  EXPECT_THROW(WeightFunction::tabulated({{0.0, 1.0}, {1.0, -2.0}}), DomainError);
}

TEST(DesignProblem, Validation) {
  Eigen::MatrixXd X = main_effects_2x2();
  EXPECT_NO_THROW(DesignProblem::from_weights(X, Eigen::Vector4d::Ones()));
  Eigen::MatrixXd dup = X;
  dup.row(3) = dup.row(0);
  EXPECT_THROW(DesignProblem::from_weights(dup, Eigen::Vector4d::Ones()), DomainError);
  EXPECT_THROW(DesignProblem::from_weights(X.topRows(2), Eigen::Vector2d::Ones()), DimensionError);
  EXPECT_THROW(DesignProblem::from_weights(X, Eigen::Vector4d(1, 1, 0, 1)), DomainError);
  EXPECT_THROW(DesignProblem::from_model(X, Eigen::Vector2d(1, 1), WeightFunction::logit()), DimensionError);
  const auto pr = DesignProblem::from_model(X, Eigen::Vector3d(0.5, -1.0, 0.25), WeightFunction::logit());
  EXPECT_DOUBLE_EQ(pr.w()(0), WeightFunction::logit()(0.5 - 1.0 + 0.25));
  EXPECT_DOUBLE_EQ(pr.w()(3), WeightFunction::logit()(0.5 + 1.0 - 0.25));
}

TEST(ObjectiveDet, UniformOnUnitWeightTwoByTwo) {
  const auto pr = DesignProblem::from_weights(main_effects_2x2(), Eigen::Vector4d::Ones());
  EXPECT_NEAR(objective_det(pr, Allocation::uniform(4)), 1.0, 1e-15);
  EXPECT_EQ(objective_det(pr, Allocation({0.5, 0.5, 0.0, 0.0})), 0.0);
  EXPECT_EQ(objective_det(pr, Allocation({1.0, 0.0, 0.0, 0.0})), 0.0);
  EXPECT_THROW(objective_det(pr, Allocation::uniform(3)), DimensionError);
}

TEST(ObjectiveDet, ExampleTwoSetupMatchesExpansion) {
  // X = [I_7; -1 ... -1] has every leave-one-out minor equal to +/-1, so
  // weights w_j = 1/j give v_j = j / 8!.
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(8, 7);
  X.topRows(7) = Eigen::MatrixXd::Identity(7, 7);
  X.row(7).setConstant(-1.0);
  Eigen::VectorXd w(8);
  for (int j = 0; j < 8; ++j) w(j) = 1.0 / (j + 1);
  const auto pr = DesignProblem::from_weights(X, w);
  const Allocation p(std::vector<double>(oracle::frozen::p_example2.begin(), oracle::frozen::p_example2.end()));
  const double det = objective_det(pr, p);
  const auto terms = objective_expansion(pr);
  EXPECT_EQ(terms.size(), 8U);
  EXPECT_LT(oracle::rel_diff(det, evaluate_expansion(terms, p)), 1e-12);
  EXPECT_LT(oracle::rel_diff(det * 40320.0, oracle::frozen::f_example2), 1e-12);
}

TEST(ObjectiveExpansion, PaperPatterns) {
  const auto pr = DesignProblem::from_weights(main_effects_2x2(), Eigen::Vector4d::Ones());
  const auto terms = objective_expansion(pr);
  ASSERT_EQ(terms.size(), 4U);
  for (const auto& t : terms) EXPECT_NEAR(t.coefficient, 16.0, 1e-12);

  Eigen::MatrixXd rank2(4, 3);
  rank2 << 1, 0, 0, 1, 1, 1, 1, 2, 2, 1, 3, 3;
  for (const auto& t : objective_expansion(DesignProblem::from_weights(rank2, Eigen::Vector4d::Ones()))) {
    EXPECT_NEAR(t.coefficient, 0.0, 1e-24);
  }

  Eigen::MatrixXd one_zero(4, 3);
  one_zero << 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0;
  int zeros = 0;
  for (const auto& t : objective_expansion(DesignProblem::from_weights(one_zero, Eigen::Vector4d::Ones()))) {
    if (t.coefficient == 0.0) ++zeros;
    else EXPECT_NEAR(t.coefficient, 1.0, 1e-15);
  }
  EXPECT_EQ(zeros, 1);
}

TEST(ObjectiveExpansion, GuardRefusesLargeProblems) {
  app::Rng rng(7);
  const auto pr = random_problem(rng, 21, 3);
  EXPECT_THROW(objective_expansion(pr), ExpansionTooLarge);
  EXPECT_NO_THROW(objective_expansion(pr, 25));
}

TEST(ObjectiveDet, EqualsExpansionOnRandomProblems) {
  app::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform01() * 6);      // 2..7
    const std::size_t n = d + static_cast<std::size_t>(rng.uniform01() * (9 - d));  // d..8
    const auto pr = random_problem(rng, n, d);
    const auto p = random_allocation(rng, n);
    const double det = objective_det(pr, p);
    const double expansion = evaluate_expansion(objective_expansion(pr), p);
    EXPECT_LE(std::abs(det - expansion), 1e-10 * std::abs(expansion)) << "n=" << n << " d=" << d;
    EXPECT_NEAR(log_objective_det(pr, p), std::log(expansion), 1e-10);
  }
}

TEST(ObjectiveDet, PermutationInvariance) {
  app::Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pr = random_problem(rng, 6, 4);
    const auto p = random_allocation(rng, 6);
    std::vector<Eigen::Index> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 5; i > 0; --i) std::swap(perm[i], perm[static_cast<std::size_t>(rng.uniform01() * (i + 1))]);
    Eigen::MatrixXd X2(6, 4);
    Eigen::VectorXd w2(6);
    Allocation p2(std::vector<double>(6));
    for (Eigen::Index i = 0; i < 6; ++i) {
      X2.row(i) = pr.X().row(perm[static_cast<std::size_t>(i)]);
      w2(i) = pr.w()(perm[static_cast<std::size_t>(i)]);
      p2[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    const double a = objective_det(pr, p);
    const double b = objective_det(DesignProblem::from_weights(X2, w2), p2);
    EXPECT_LE(std::abs(a - b), 1e-12 * a);
  }
}

TEST(ObjectiveDet, HomogeneousInWeights) {
  app::Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 3 + trial % 4;
    const auto pr = random_problem(rng, d + 2, d);
    const auto p = random_allocation(rng, d + 2);
    const double c = rng.uniform(0.1, 5.0);
    const double scaled = objective_det(DesignProblem::from_weights(pr.X(), c * pr.w()), p);
    EXPECT_LE(std::abs(scaled - std::pow(c, static_cast<double>(d)) * objective_det(pr, p)), 1e-11 * scaled);
  }
}

TEST(ObjectiveDet, RootDetConcaveAlongSegments) {
  app::Rng rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + trial % 5;
    const std::size_t n = d + 1 + trial % 3;
    const auto pr = random_problem(rng, n, d);
    const auto p = random_allocation(rng, n);
    const auto q = random_allocation(rng, n);
    Allocation mid{std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (p[i] + q[i]);
    const double inv_d = 1.0 / static_cast<double>(d);
    const double lhs = std::pow(objective_det(pr, mid), inv_d);
    const double rhs = 0.5 * (std::pow(objective_det(pr, p), inv_d) + std::pow(objective_det(pr, q), inv_d));
    EXPECT_GE(lhs, rhs * (1.0 - 1e-12));
  }
}

TEST(EquivalenceGap, ZeroAtKnownOptimum) {
  const auto pr = DesignProblem::from_weights(main_effects_2x2(), Eigen::Vector4d::Constant(0.3));
  EXPECT_LT(equivalence_gap(pr, Allocation::uniform(4)), 1e-14);
  EXPECT_GT(equivalence_gap(pr, Allocation({0.4, 0.2, 0.2, 0.2})), 0.01);
}

TEST(ReducedObjective, MatchesOracleAndGradient) {
  app::Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 8;
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(0.0, 3.0);
    const auto p = oracle::random_simplex(rng, n);
    const Allocation alloc(p);
    EXPECT_NEAR(reduced_objective(v, alloc), oracle::reduced_value(v, p), 1e-14);
    const auto g = reduced_gradient(v, alloc);
    const auto gl = oracle::reduced_grad(std::vector<long double>(v.begin(), v.end()),
                                        std::vector<long double>(p.begin(), p.end()));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g[i], static_cast<double>(gl[i]), 1e-13);
  }
}

TEST(DesignMatrix, FactorialOrderAndShape) {
  const auto pts = full_factorial_points(2);
  ASSERT_EQ(pts.size(), 4U);
  EXPECT_EQ(pts[0], (std::vector<double>{1, 1}));
  EXPECT_EQ(pts[1], (std::vector<double>{1, -1}));
  EXPECT_EQ(pts[2], (std::vector<double>{-1, 1}));
  EXPECT_EQ(pts[3], (std::vector<double>{-1, -1}));
  for (std::size_t k = 2; k <= 6; ++k) {
    const auto X = full_factorial_matrix(k);
    EXPECT_EQ(X.rows(), 1 << k);
    EXPECT_EQ(X.cols(), (1 << k) - 1);
  }
  const auto X3 = model_matrix(full_factorial_points(3), interaction_terms(3, 2));
  EXPECT_EQ(X3(5, 4), -1.0);  // point (-1, 1, -1), term x1 x2
}
