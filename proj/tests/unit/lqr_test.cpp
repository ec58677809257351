#include <cmath>

#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/lqr.hpp"
#include "support.hpp"

using namespace ddlqr;
using ddlqr::test::max_diff;
using ddlqr::test::random_matrix;
using ddlqr::test::to_eigen;

TEST(Weights, MustBePositiveDefinite) {
  EXPECT_THROW(LqrWeights(Matrix{{1, 0}, {0, -1}}, Matrix{{1}}), Error);
  EXPECT_THROW(LqrWeights(Matrix::identity(2), Matrix{{0}}), Error);
  const LqrWeights w = LqrWeights::scaled_identity(3, 2, 2.0, 1e-3);
  EXPECT_EQ(w.q(), 2.0 * Matrix::identity(3));
  EXPECT_EQ(w.r(), 1e-3 * Matrix::identity(2));
}

TEST(Dlyap, Examples) {
  const Matrix c{{2, 1}, {1, 3}};
  EXPECT_EQ(dlyap(Matrix::zeros(2, 2), c), c);
  EXPECT_NEAR(dlyap(Matrix{{0.5}}, Matrix{{1.0}})(0, 0), 4.0 / 3.0, 1e-15);
}

TEST(Dlyap, ResidualAndPsdOnRandomStable) {
  GaussianStream g(31);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = random_matrix(4, 4, g);
    m = (0.95 / spectral_radius(m)) * m;
    const Matrix s = random_matrix(4, 2, g);
    const Matrix c = times_transpose(s, s);
    const Matrix p = dlyap(m, c);
    const Matrix res = p - c - m * p * m.transpose();
    EXPECT_LE(res.frobenius_norm(), 1e-10 * p.frobenius_norm());
    EXPECT_GE(min_eigenvalue(p), -1e-10 * p.max_abs());
  }
}

TEST(Dlyap, UnstableRejected) {
  EXPECT_THROW(dlyap(Matrix{{1.2}}, Matrix{{1.0}}), Error);
}

TEST(LqrCost, Examples) {
  const LtiSystem zero(Matrix::zeros(2, 2), Matrix{{1}, {0}});
  const LqrWeights w2(Matrix{{2, 0}, {0, 3}}, Matrix{{1}});
  EXPECT_NEAR(lqr_cost(zero, w2, Matrix::zeros(1, 2)), 5.0, 1e-14);

  const LtiSystem scalar(Matrix{{0.5}}, Matrix{{1.0}});
  const LqrWeights w1(Matrix{{1.0}}, Matrix{{1.0}});
  EXPECT_NEAR(lqr_cost(scalar, w1, Matrix{{-0.5}}), 1.25, 1e-14);
  EXPECT_TRUE(std::isinf(lqr_cost(scalar, w1, Matrix{{0.51}})));  // closed loop 1.01
}

TEST(Dare, ZeroDynamics) {
  const LtiSystem sys(Matrix::zeros(2, 2), Matrix{{1}, {1}});
  const LqrWeights w = LqrWeights::scaled_identity(2, 1, 1.0, 1.0);
  const DareSolution s = dare_solve(sys, w);
  EXPECT_LT(max_diff(s.p, w.q()), 1e-12);
  EXPECT_LT(s.k.max_abs(), 1e-12);
}

TEST(Dare, ScalarGoldenRatio) {
  const LtiSystem sys(Matrix{{1.0}}, Matrix{{1.0}});
  const LqrWeights w(Matrix{{1.0}}, Matrix{{1.0}});
  const DareSolution s = dare_solve(sys, w);
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  EXPECT_NEAR(s.p(0, 0), phi, 1e-12);
  EXPECT_NEAR(s.k(0, 0), -phi / (1.0 + phi), 1e-12);
  EXPECT_LE(dare_residual(sys, w, s.p), 1e-12);
}

TEST(Dare, MatchesValueIterationOracle) {
  GaussianStream g(32);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3, m = 1 + trial % 2;
    const LtiSystem sys(random_matrix(n, n, g), random_matrix(n, m, g));
    const LqrWeights w = LqrWeights::scaled_identity(n, m, 1.0, 0.1);
    const DareSolution s = dare_solve(sys, w);
    const Eigen::MatrixXd p = test::riccati_iterate(to_eigen(sys.a()), to_eigen(sys.b()), to_eigen(w.q()), to_eigen(w.r()));
    const Eigen::MatrixXd k = test::riccati_gain(to_eigen(sys.a()), to_eigen(sys.b()), p, to_eigen(w.r()));
    EXPECT_LT((to_eigen(s.p) - p).norm(), 1e-7 * p.norm());
    EXPECT_LT((to_eigen(s.k) - k).norm(), 1e-6 * (1 + k.norm()));
    EXPECT_TRUE(is_stabilizing(sys, s.k));
    EXPECT_LE(s.residual, 1e-9);
  }
}

TEST(Dare, BenchmarkLocalOptimality) {
  const LtiSystem sys = benchmark_plant();
  const LqrWeights w = LqrWeights::scaled_identity(4, 1, 1.0, 1e-3);
  const DareSolution s = dare_solve(sys, w);
  const double jstar = lqr_cost(sys, w, s.k);
  ASSERT_TRUE(std::isfinite(jstar));
  GaussianStream g(33);
  int probed = 0;
  for (int i = 0; i < 100; ++i) {
    const Matrix k = s.k + random_matrix(1, 4, g, 0.05 * s.k.max_abs());
    const double j = lqr_cost(sys, w, k);
    if (!std::isfinite(j)) continue;
    ++probed;
    EXPECT_GE(j, jstar * (1 - 1e-12));
  }
  EXPECT_GT(probed, 50);
}

TEST(Dare, NonStabilizablePairRejected) {
  const LtiSystem sys(Matrix{{2.0, 0.0}, {0.0, 0.5}}, Matrix{{0.0}, {1.0}});
  try {
    dare_solve(sys, LqrWeights::scaled_identity(2, 1, 1.0, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

TEST(Gap, Examples) {
  const LtiSystem sys(Matrix{{0.5}}, Matrix{{1.0}});
  const LqrWeights w(Matrix{{1.0}}, Matrix{{1.0}});
  const Matrix kstar = dare_solve(sys, w).k;
  EXPECT_NEAR(optimality_gap(sys, w, kstar, kstar), 0.0, 1e-14);
  EXPECT_TRUE(std::isinf(optimality_gap(sys, w, Matrix{{0.6}}, kstar)));
  // closed loop 0.1: P = 1/(1 − 0.01), J = (1 + 0.16)·P
  const double j = 1.16 / 0.99;
  const double jstar = lqr_cost(sys, w, kstar);
  EXPECT_NEAR(optimality_gap(sys, w, Matrix{{-0.4}}, kstar), (j - jstar) / jstar, 1e-13);
  EXPECT_GT(optimality_gap(sys, w, Matrix{{-0.4}}, kstar), 0.0);
  EXPECT_TRUE(std::isinf(optimality_gap_from_cost(INFINITY, jstar)));
}

TEST(Riccati, StabilizingCertificateDominatesIdentity) {
  const LtiSystem sys = benchmark_plant();
  const LqrWeights w = LqrWeights::scaled_identity(4, 1, 1.0, 1e-3);
  const GainResult r = lqr_riccati(sys, w);
  ASSERT_TRUE(r.stabilizing.has_value());
  EXPECT_TRUE(*r.stabilizing);
  const Matrix pcl = dlyap(sys.closed_loop(r.k), Matrix::identity(4));
  EXPECT_GE(min_eigenvalue(pcl - Matrix::identity(4)), -1e-9);
}
