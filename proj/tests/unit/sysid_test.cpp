#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/sysid.hpp"
#include "support.hpp"

using namespace ddlqr;
using ddlqr::test::max_diff;
using ddlqr::test::random_matrix;

TEST(LeastSquares, NoiselessExactRecovery) {
  const LtiSystem sys = benchmark_plant();
  const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0, .seed = 4}, 1.0, 10);
  const IdentifiedModel id = least_squares(rec);
  EXPECT_LT(max_diff(id.a_hat, sys.a()), 1e-8);
  EXPECT_LT(max_diff(id.b_hat, sys.b()), 1e-8);
  EXPECT_EQ(id.rank_d0, 5u);
}

TEST(LeastSquares, TwoStepScalarHandSolve) {
  const DataRecord rec{Matrix{{1, 0}}, Matrix{{0, 1}}, Matrix{{1, 0.5}}, std::nullopt};
  const IdentifiedModel id = least_squares(rec);
  EXPECT_NEAR(id.b_hat(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(id.a_hat(0, 0), 0.5, 1e-14);
}

TEST(LeastSquares, RankDeficientRejected) {
  const DataRecord rec = simulate_and_collect(benchmark_plant(), NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 4}, 1.0, 3);
  try {
    least_squares(rec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficient);
  }
  EXPECT_NO_THROW(tikhonov(rec, 1.0));
}

TEST(Tikhonov, ScalarHandInverse) {
  const DataRecord rec{Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{3.0}}, std::nullopt};
  const IdentifiedModel id = tikhonov(rec, 1.0);
  EXPECT_NEAR(id.b_hat(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(id.a_hat(0, 0), 1.0, 1e-14);
}

TEST(Tikhonov, ContinuityAtZero) {
  const DataRecord rec = simulate_and_collect(benchmark_plant(), NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 5}, 1.0, 10);
  const IdentifiedModel ls = least_squares(rec);
  const IdentifiedModel tk = tikhonov(rec, 1e-10);
  EXPECT_LT(max_diff(ls.a_hat, tk.a_hat), 1e-6);
  EXPECT_LT(max_diff(ls.b_hat, tk.b_hat), 1e-6);
}

TEST(Tikhonov, ShrinkageLimit) {
  const DataRecord rec = simulate_and_collect(benchmark_plant(), NoiseSpec{.sigma_x = 1, .sigma_w = 0.1, .seed = 6}, 1.0, 10);
  const IdentifiedModel id = tikhonov(rec, 1e12);
  const double bound = (rec.x1 * rec.d0().transpose()).frobenius_norm() / 1e12;
  EXPECT_LE(hstack(id.b_hat, id.a_hat).frobenius_norm(), bound * (1 + 1e-9));
}

TEST(Tikhonov, MonotoneShrinkage) {
  GaussianStream g(41);
  for (int trial = 0; trial < 20; ++trial) {
    const LtiSystem sys(random_matrix(3, 3, g, 0.5), random_matrix(3, 1, g));
    const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0.2, .seed = 300u + trial}, 1.0, 2 + trial % 10);
    double prev = INFINITY;
    for (const double gamma : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
      const IdentifiedModel id = tikhonov(rec, gamma);
      const double norm = hstack(id.b_hat, id.a_hat).frobenius_norm();
      EXPECT_LE(norm, prev * (1 + 1e-9));
      prev = norm;
    }
  }
}

TEST(Tikhonov, MinimizesRidgeObjective) {
  // Gradient descent on ‖X1 − Θ·D0‖² + γ‖Θ‖² as an independent oracle.
  GaussianStream g(42);
  for (int trial = 0; trial < 5; ++trial) {
    const LtiSystem sys(random_matrix(2, 2, g, 0.5), random_matrix(2, 1, g));
    const DataRecord rec = simulate_and_collect(sys, NoiseSpec{.sigma_x = 1, .sigma_w = 0.3, .seed = 400u + trial}, 1.0, 4);
    const double gamma = 0.5;
    const Eigen::MatrixXd d0 = test::to_eigen(rec.d0());
    const Eigen::MatrixXd x1 = test::to_eigen(rec.x1);
    const Eigen::MatrixXd h = d0 * d0.transpose() + gamma * Eigen::MatrixXd::Identity(3, 3);
    const double step = 1.0 / h.operatorNorm();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(2, 3);
    for (int it = 0; it < 200000; ++it) {
      const Eigen::MatrixXd grad = theta * h - x1 * d0.transpose();
      theta -= step * grad;
      if (grad.norm() < 1e-13) break;
    }
    const IdentifiedModel id = tikhonov(rec, gamma);
    const Matrix est = hstack(id.b_hat, id.a_hat);
    EXPECT_LT(max_diff(est, test::from_eigen(theta)), 1e-6);
  }
}

TEST(Tikhonov, RejectsNonPositiveGamma) {
  const DataRecord rec{Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{3.0}}, std::nullopt};
  EXPECT_THROW(tikhonov(rec, 0.0), Error);
  EXPECT_THROW(tikhonov(rec, -1.0), Error);
}
