#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/lmi.hpp"
#include "support.hpp"

using namespace ddlqr;
using ddlqr::test::max_diff;

TEST(LmiBuilder, TraceMinimizationAboveIdentity) {
  LmiBuilder b;
  const AffineExpr p = b.add_symmetric("P", 3);
  b.add_psd(p - Matrix::identity(3));
  b.minimize(trace(p));
  const SdpProblem prob = b.build();
  EXPECT_EQ(prob.num_vars, 6u);
  const SdpSolution s = solve_sdp(prob);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_LT(max_diff(p.evaluate(s.x), Matrix::identity(3)), 1e-6);
}

TEST(LmiBuilder, RectangularVariableSharedAcrossConstraints) {
  LmiBuilder b;
  const AffineExpr p = b.add_symmetric("P", 2);
  const AffineExpr y = b.add_matrix("Y", 1, 2);
  const AffineExpr l = b.add_symmetric("L", 1);
  b.add_psd(AffineExpr::block_matrix({{l, y}, {y.transpose(), p}}));
  b.add_psd(AffineExpr::block_matrix({{p, y.transpose()}, {y, l}}));
  const SdpProblem prob = b.build();
  ASSERT_EQ(prob.blocks.size(), 2u);
  const LmiBuilder::Variable& yv = b.variable("Y");
  EXPECT_EQ(yv.rows, 1u);
  EXPECT_EQ(yv.cols, 2u);
  EXPECT_FALSE(yv.symmetric);
  for (const auto& blk : prob.blocks) {
    bool uses_y = false;
    for (const auto& t : blk.terms) uses_y |= t.var >= yv.offset && t.var < yv.offset + 2;
    EXPECT_TRUE(uses_y);
  }
  EXPECT_EQ(prob.num_vars, 3u + 2u + 1u);
}

TEST(LmiBuilder, PackedPointRoundTrips) {
  LmiBuilder b;
  const AffineExpr p = b.add_symmetric("P", 2);
  const AffineExpr y = b.add_matrix("Y", 2, 1);
  const Matrix c{{1, 2}, {0, 1}};
  b.add_psd(AffineExpr::block_matrix({{p, c * y}, {(c * y).transpose(), AffineExpr(Matrix{{4.0}})}}));
  b.add_equality(y, Matrix{{0.5}, {0.25}});
  const Matrix pv{{3, 1}, {1, 2}};
  const Matrix yv{{0.5}, {0.25}};
  const std::vector<double> x = b.pack({pv, yv});
  EXPECT_EQ(p.evaluate(x), pv);
  EXPECT_EQ(y.evaluate(x), yv);
  const SdpProblem prob = b.build();
  const Matrix f = evaluate_block(prob.blocks[0], x);
  Matrix expected(3, 3);
  expected.set_block(0, 0, pv);
  expected.set_block(0, 2, c * yv);
  expected.set_block(2, 0, (c * yv).transpose());
  expected(2, 2) = 4.0;
  EXPECT_LT(max_diff(f, expected), 1e-15);
  const FeasibilityReport rep = verify_feasibility(prob, x);
  EXPECT_EQ(rep.equality_residual, 0.0);
  EXPECT_GT(rep.min_eigenvalue, 0.0);
}

TEST(LmiBuilder, ForeignVariablesRejected) {
  LmiBuilder a, b;
  const AffineExpr pa = a.add_symmetric("P", 2);
  try {
    b.add_psd(pa);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownVariable);
  }
  EXPECT_THROW(a.variable("Q"), Error);
}

TEST(LmiBuilder, ShapeErrors) {
  LmiBuilder b;
  const AffineExpr y = b.add_matrix("Y", 2, 3);
  try {
    b.add_psd(y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(b.minimize(y), Error);
  EXPECT_THROW(b.add_equality(y, Matrix(3, 2)), Error);
  EXPECT_THROW(AffineExpr::block_matrix({{y, y}, {y}}), Error);
  EXPECT_THROW(b.add_psd(AffineExpr::block_matrix({{AffineExpr(Matrix::zeros(2, 2)), y}})), Error);
}

TEST(LmiBuilder, AsymmetricConstraintRejected) {
  LmiBuilder b;
  const AffineExpr y = b.add_matrix("Y", 2, 2);
  try {
    b.add_psd(y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
  }
}

TEST(AffineExpr, LinearOperationsEvaluatePointwise) {
  LmiBuilder b;
  const AffineExpr y = b.add_matrix("Y", 2, 2);
  const Matrix c{{1, -1}, {2, 0.5}};
  const AffineExpr e = 2.0 * (c * y) - y * c + Matrix::identity(2);
  const Matrix yv{{0.3, -1.2}, {0.7, 2.0}};
  const std::vector<double> x = b.pack({yv});
  EXPECT_LT(max_diff(e.evaluate(x), 2.0 * (c * yv) - yv * c + Matrix::identity(2)), 1e-15);
  EXPECT_NEAR(trace_product(c, y).evaluate(x)(0, 0), (c * yv).trace(), 1e-15);
  EXPECT_EQ(y.transpose().evaluate(x), yv.transpose());
}
