#include <gtest/gtest.h>

#include "support.hpp"

using namespace xipm;

TEST(Residual, ToyBlocks) {
  const auto p = test::toy_problem();
  const auto r = residual(p, test::toy_point(), 0.5);
  EXPECT_DOUBLE_EQ(r.stationarity[0], 1.0);
  EXPECT_DOUBLE_EQ(r.complementarity[0], 0.5);
  EXPECT_EQ(r.equality.size(), 0);
  EXPECT_DOUBLE_EQ(r.norm_inf(), 1.0);
  EXPECT_DOUBLE_EQ(merit(r), std::sqrt(1.25));
}

TEST(Residual, ZeroAtTrajectoryPoint) {
  const auto p = test::toy_problem();
  const double x = 0.5 * (1.0 + std::sqrt(3.0));
  const Iterate w{Vector::Constant(1, x), Vector::Constant(1, x)};
  EXPECT_LT(residual(p, w, 0.5).norm_inf(), 1e-15);
}

TEST(Residual, OrdersInequalityMultipliersFirst) {
  const auto inst = test::random_instance(3, 2, 1, 9);
  const auto& p = inst.problem;
  const auto r = residual(p, inst.w, 0.0);
  const Vector expect = Matrix(p.hessian) * inst.w.x + p.linear_cost -
                        Matrix(p.a_ineq).transpose() * inst.w.lambda.head(2) -
                        Matrix(p.a_eq).transpose() * inst.w.lambda.tail(1);
  EXPECT_LT((r.stationarity - expect).lpNorm<Eigen::Infinity>(), 1e-13);
}

TEST(Jacobian, ToyEntries) {
  const auto p = test::toy_problem();
  const Matrix j = Matrix(assemble_jacobian(p, test::toy_point()));
  Matrix expect(2, 2);
  expect << 1, -1, 1, 1;
  EXPECT_EQ(j, expect);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = test::random_instance(5, 4, 2, 40 + seed);
    const auto& p = inst.problem;
    const Matrix j = Matrix(assemble_jacobian(p, inst.w));
    const Vector w0 = inst.w.stacked();
    const double h = 1e-6;
    for (int k = 0; k < w0.size(); ++k) {
      Vector e = Vector::Zero(w0.size());
      e[k] = h;
      const Vector fp = residual(p, Iterate::from_stacked(w0 + e, 5), 0.3).stacked();
      const Vector fm = residual(p, Iterate::from_stacked(w0 - e, 5), 0.3).stacked();
      const Vector col = (fp - fm) / (2 * h);
      EXPECT_LT((col - j.col(k)).lpNorm<Eigen::Infinity>(), 1e-7) << "seed " << seed << " col " << k;
    }
  }
}

TEST(Jacobian, IndependentOfMu) {
  // The Jacobian takes no μ, and F^μ differs from F^0 by a constant.
  const auto inst = test::random_instance(4, 3, 1, 2);
  const auto& p = inst.problem;
  const Vector d = residual(p, inst.w, 0.7).stacked() - residual(p, inst.w, 0.0).stacked();
  Vector expect = Vector::Zero(d.size());
  expect.segment(4, 3).setConstant(-0.7);
  EXPECT_LT((d - expect).lpNorm<Eigen::Infinity>(), 1e-15);
}

TEST(KktFactorization, DenseAndSparseAgree) {
  const auto inst = test::random_instance(8, 6, 3, 77);
  const auto& p = inst.problem;
  const Vector rhs = residual(p, inst.w, 0.2).stacked();
  const auto dense = jacobian(p, inst.w, FactorizationMode::dense);
  const auto sparse = jacobian(p, inst.w, FactorizationMode::sparse);
  EXPECT_FALSE(dense.is_sparse());
  EXPECT_TRUE(sparse.is_sparse());
  const Vector a = dense.solve(rhs);
  const Vector b = sparse.solve(rhs);
  EXPECT_LT((a - b).lpNorm<Eigen::Infinity>(), 1e-10 * (1 + a.lpNorm<Eigen::Infinity>()));
  EXPECT_LT(dense.residual_check(a, rhs), 1e-12 * (1 + rhs.lpNorm<Eigen::Infinity>()));
}

TEST(KktFactorization, ReusedAcrossRightHandSides) {
  const auto inst = test::random_instance(5, 3, 1, 12);
  const auto f = jacobian(inst.problem, inst.w);
  const Matrix j = Matrix(f.matrix());
  for (int k = 0; k < 4; ++k) {
    const Vector rhs = Vector::LinSpaced(f.size(), k, 2 * k + 1);
    EXPECT_LT((j * f.solve(rhs) - rhs).lpNorm<Eigen::Infinity>(), 1e-11 * (1 + 2 * k));
  }
}

TEST(KktFactorization, FlagsSingularMatrix) {
  const auto p = test::toy_problem();
  const Iterate w{Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
  for (auto mode : {FactorizationMode::dense, FactorizationMode::sparse}) {
    const auto f = jacobian(p, w, mode);
    EXPECT_TRUE(f.singular());
    EXPECT_THROW(f.solve(Vector::Ones(2)), SingularFactorizationError);
  }
}

TEST(KktFactorization, ShiftRegularizes) {
  const auto p = test::toy_problem();
  const Iterate w{Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
  const auto f = jacobian(p, w, FactorizationMode::dense, 1e-10 * 0.5);
  EXPECT_FALSE(f.singular());
}

TEST(KktFactorization, RejectsWrongDimension) {
  const auto f = jacobian(test::toy_problem(), test::toy_point());
  EXPECT_THROW(f.solve(Vector::Ones(3)), std::invalid_argument);
}

TEST(Interior, DetectsBoundary) {
  const auto p = test::toy_problem();
  EXPECT_TRUE(is_interior(p, test::toy_point()));
  EXPECT_FALSE(is_interior(p, {Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)}));
  EXPECT_FALSE(is_interior(p, {Vector::Constant(1, 2.0), Vector::Constant(1, -1.0)}));
}

TEST(MaxFeasibleScaling, SafeDirectionGivesOne) {
  const auto p = test::toy_problem();
  Vector d(2);
  d << 1.0, 1.0;
  EXPECT_EQ(max_feasible_scaling(p, test::toy_point(), d), 1.0);
}

TEST(MaxFeasibleScaling, StopsAtBoundary) {
  const auto p = test::toy_problem();
  Vector d(2);
  d << -2.0, 0.0;  // c = 1 - 2α reaches 0 at α = 0.5
  const double a = max_feasible_scaling(p, test::toy_point(), d);
  EXPECT_LE(a, 0.5);
  EXPECT_GT(a, 0.5 - 1e-12);
}

TEST(MaxFeasibleScaling, ResultKeepsEveryQuantityAboveFloor) {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = test::random_instance(4, 6, 1, 500 + seed);
    const auto& p = inst.problem;
    Vector d(inst.w.size());
    for (int k = 0; k < d.size(); ++k) d[k] = 10 * rng.gaussian();
    const double a = max_feasible_scaling(p, inst.w, d);
    EXPECT_GT(a, 0.0);
    EXPECT_LE(a, 1.0);
    EXPECT_GE(implicit_values(p, inst.w.moved(d, a)).minCoeff(), kSmallestNormal);
  }
}

TEST(MaxFeasibleScaling, ThrowsWhenAlreadyBelowFloor) {
  const auto p = test::toy_problem();
  const Iterate w{Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)};
  EXPECT_THROW(max_feasible_scaling(p, w, Vector::Ones(2)), InteriorLossError);
}
