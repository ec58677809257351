#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/matrix.hpp"

using ddlqr::Matrix;

TEST(Matrix, RejectsNonFiniteEntries) {
  EXPECT_THROW(Matrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}), ddlqr::Error);
  EXPECT_THROW((Matrix{{1.0, INFINITY}}), ddlqr::Error);
}

TEST(Matrix, RejectsWrongDataLength) {
  try {
    Matrix(2, 2, {1.0, 2.0, 3.0});
    FAIL();
  } catch (const ddlqr::Error& e) {
    EXPECT_EQ(e.code(), ddlqr::ErrorCode::DimensionMismatch);
  }
}

TEST(Matrix, RaggedInitializerRejected) {
  EXPECT_THROW((Matrix{{1.0, 2.0}, {3.0}}), ddlqr::Error);
}

TEST(Matrix, ProductAndTransposeVariants) {
  const Matrix a{{1, 2}, {3, 4}, {5, 6}};
  const Matrix b{{1, 0, 2}, {0, 1, 1}};
  const Matrix ab = a * b;
  EXPECT_EQ(ab, (Matrix{{1, 2, 4}, {3, 4, 10}, {5, 6, 16}}));
  EXPECT_EQ(transpose_times(a, a), a.transpose() * a);
  EXPECT_EQ(times_transpose(b, b), b * b.transpose());
  EXPECT_DOUBLE_EQ(inner(a, a), a.frobenius_norm() * a.frobenius_norm());
}

TEST(Matrix, ProductDimensionMismatch) {
  const Matrix a(2, 3);
  try {
    (void)(a * a);
    FAIL();
  } catch (const ddlqr::Error& e) {
    EXPECT_EQ(e.code(), ddlqr::ErrorCode::DimensionMismatch);
  }
}

TEST(Matrix, BlocksAndStacking) {
  Matrix m = Matrix::zeros(3, 3);
  m.set_block(1, 1, Matrix{{1, 2}, {3, 4}});
  EXPECT_EQ(m.block(1, 1, 2, 2), (Matrix{{1, 2}, {3, 4}}));
  EXPECT_EQ(m.col(2), (Matrix{{0}, {2}, {4}}));
  const Matrix h = hstack(Matrix{{1}}, Matrix{{2, 3}});
  EXPECT_EQ(h, (Matrix{{1, 2, 3}}));
  const Matrix v = vstack(Matrix{{1, 2}}, Matrix{{3, 4}});
  EXPECT_EQ(v, (Matrix{{1, 2}, {3, 4}}));
  EXPECT_DOUBLE_EQ(v.trace(), 5.0);
}

TEST(Matrix, AllFiniteDetectsOverflow) {
  Matrix m{{1e300}};
  EXPECT_TRUE(m.all_finite());
  m = m * 1e300;
  EXPECT_FALSE(m.all_finite());
}
