#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/linalg.hpp"
#include "ddlqr/lti.hpp"
#include "support.hpp"

using namespace ddlqr;
using ddlqr::test::max_diff;
using ddlqr::test::random_matrix;

TEST(Lti, RejectsMismatchedShapes) {
  EXPECT_THROW(LtiSystem(Matrix(2, 3), Matrix(2, 1)), Error);
  EXPECT_THROW(LtiSystem(Matrix(2, 2), Matrix(3, 1)), Error);
}

TEST(Lti, BenchmarkPlantIsOpenLoopUnstable) {
  const LtiSystem sys = benchmark_plant();
  EXPECT_EQ(sys.n(), 4u);
  EXPECT_EQ(sys.m(), 1u);
  EXPECT_GT(spectral_radius(sys.a()), 1.0);
}

TEST(Simulate, ZeroStateStaysZero) {
  const LtiSystem sys = benchmark_plant();
  const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 0, .sigma_w = 0, .seed = 1}, 0.0, 6);
  EXPECT_EQ(rec.x0.max_abs(), 0.0);
  EXPECT_EQ(rec.x1.max_abs(), 0.0);
  EXPECT_EQ(rec.horizon(), 6u);
}

TEST(Simulate, ScalarScriptedRecursion) {
  const LtiSystem sys(Matrix{{0.5}}, Matrix{{1.0}});
  const DataRecord rec = simulate_with_inputs(sys, Matrix{{0.0}}, Matrix{{1.0, 0.0}}, NoiseSpec{.sigma_x = 0, .sigma_w = 0, .seed = 0});
  EXPECT_EQ(rec.x0, (Matrix{{0.0, 1.0}}));
  EXPECT_EQ(rec.x1, (Matrix{{1.0, 0.5}}));
}

TEST(Simulate, SameSeedSameRecord) {
  const LtiSystem sys = benchmark_plant();
  const NoiseSpec noise{.sigma_x = 1, .sigma_w = 0.1, .seed = 77};
  const DataRecord a = simulate_and_collect(sys, noise, 1.0, 20);
  const DataRecord b = simulate_and_collect(sys, noise, 1.0, 20);
  EXPECT_EQ(a.u0, b.u0);
  EXPECT_EQ(a.x0, b.x0);
  EXPECT_EQ(a.x1, b.x1);
  const DataRecord c = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 78}, 1.0, 20);
  EXPECT_NE(a.x1, c.x1);
}

TEST(Simulate, SuccessorIdentityHolds) {
  GaussianStream g(21);
  for (int trial = 0; trial < 10; ++trial) {
    const LtiSystem sys(random_matrix(3, 3, g, 0.5), random_matrix(3, 2, g));
    const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0.3, .seed = 100u + trial}, 1.0, 12);
    ASSERT_TRUE(rec.w0.has_value());
    const Matrix predicted = hstack(sys.b(), sys.a()) * rec.d0() + *rec.w0;
    EXPECT_LT(max_diff(predicted, rec.x1), 1e-12 * (1 + rec.x1.max_abs()));
    EXPECT_EQ(rec.x0.block(0, 1, 3, 11), rec.x1.block(0, 0, 3, 11));
  }
}

TEST(Simulate, DivergenceReported) {
  const LtiSystem sys(Matrix{{100.0}}, Matrix{{1.0}});
  try {
    simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0, .seed = 1}, 1.0, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TrajectoryDiverged);
  }
}

TEST(Simulate, NegativeNoiseRejected) {
  EXPECT_THROW(simulate_and_collect(benchmark_plant(), NoiseSpec{.sigma_x = -1}, 1.0, 5), Error);
}

TEST(Covariances, GammaZeroGivesPhi) {
  const DataRecord rec = simulate_and_collect(benchmark_plant(), NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 3}, 1.0, 10);
  const CovarianceData cov = covariances(rec, 0.0);
  EXPECT_EQ(cov.psi, cov.phi);
  EXPECT_EQ(cov.rank_d0, 5u);
}

TEST(Covariances, HandComputedPsi) {
  const DataRecord rec{Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{3.0}}, std::nullopt};
  const CovarianceData cov = covariances(rec, 1.0);
  EXPECT_EQ(cov.psi, (Matrix{{2, 1}, {1, 2}}));
  EXPECT_EQ(cov.psi1, (Matrix{{2, 1}}));
  EXPECT_EQ(cov.psi2, (Matrix{{1, 2}}));
}

TEST(Covariances, ShiftProperties) {
  GaussianStream g(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t horizon = 2 + trial % 8;  // includes rank-deficient cases
    const LtiSystem sys(random_matrix(3, 3, g, 0.5), random_matrix(3, 1, g));
    const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 200u + trial}, 1.0, horizon);
    const double gamma = 0.05 * (trial + 1);
    const CovarianceData cov = covariances(rec, gamma);
    const double t = static_cast<double>(horizon);
    EXPECT_LT(max_diff(cov.psi - cov.phi, (gamma / t) * Matrix::identity(4)), 1e-12);
    EXPECT_TRUE(is_positive_definite(cov.psi)) << "T=" << horizon;
    EXPECT_EQ(vstack(cov.psi1, cov.psi2), cov.psi);

    const auto shifted = symmetric_eigen(t * cov.psi).values;
    const auto base = symmetric_eigen(t * cov.phi).values;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(shifted[i], base[i] + gamma, 1e-9 * (1 + base[3]));

    const Matrix ba = hstack(sys.b(), sys.a());
    EXPECT_LT(max_diff(cov.xbar1, ba * cov.phi + *cov.wbar0), 1e-10 * (1 + cov.xbar1.max_abs()));

    if (is_positive_definite(cov.phi)) {
      EXPECT_LE(condition_number(t * cov.psi), condition_number(t * cov.phi));
    }
  }
}
