#include <cmath>

#include <gtest/gtest.h>

#include "ddlqr/error.hpp"
#include "ddlqr/io.hpp"
#include "ddlqr/sdp.hpp"
#include "sdp_oracle.hpp"

using namespace ddlqr;

namespace {

LmiBlock scalar_block(double constant, std::size_t var, double coeff) {
  return LmiBlock{1, Matrix{{constant}}, {{var, 0, 0, coeff}}};
}

}  // namespace

TEST(Sdp, ScalarLowerBound) {
  SdpProblem p{1, {1.0}, {scalar_block(-1.0, 0, 1.0)}, {}};
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-7);
  EXPECT_LE(s.primal_residual, 1e-8);
  EXPECT_LE(s.dual_residual, 1e-8);
  EXPECT_LE(s.gap, 1e-8);
}

TEST(Sdp, DeterminantCondition) {
  LmiBlock b{2, Matrix{{0, 1}, {1, 0}}, {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  SdpProblem p{1, {1.0}, {b}, {}};
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-7);
}

TEST(Sdp, SmallestEigenvalue) {
  LmiBlock b{2, Matrix{{3, 0}, {0, 5}}, {{0, 0, 0, -1.0}, {0, 1, 1, -1.0}}};
  SdpProblem p{1, {-1.0}, {b}, {}};
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 3.0, 1e-7);
  EXPECT_NEAR(s.objective, -3.0, 1e-7);
}

TEST(Sdp, EqualityConstrained) {
  // min x0 + x1 s.t. x0 − x1 = 1, x0 ≥ 0, x1 ≥ 0  →  (1, 0)
  SdpProblem p{2, {1.0, 1.0}, {scalar_block(0.0, 0, 1.0), scalar_block(0.0, 1, 1.0)}, {{{{0, 1.0}, {1, -1.0}}, 1.0}}};
  const SdpSolution s = solve_sdp(p);
  ASSERT_EQ(s.status, SdpStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-7);
  EXPECT_NEAR(s.x[1], 0.0, 1e-7);
  EXPECT_LE(test::check_kkt(p, s).worst(), 1e-7);
}

TEST(Sdp, InfeasibleDetected) {
  // x ≥ 1 and x ≤ 0
  SdpProblem p{1, {1.0}, {scalar_block(-1.0, 0, 1.0), scalar_block(0.0, 0, -1.0)}, {}};
  const SdpSolution s = solve_sdp(p);
  EXPECT_EQ(s.status, SdpStatus::Infeasible);
  EXPECT_LE(s.certificate_residual, 1e-8);
}

TEST(Sdp, UnboundedDetected) {
  SdpProblem p{1, {-1.0}, {scalar_block(0.0, 0, 1.0)}, {}};
  const SdpSolution s = solve_sdp(p);
  EXPECT_EQ(s.status, SdpStatus::Unbounded);
}

TEST(Sdp, MalformedProblemsRejected) {
  SdpProblem bad_var{1, {1.0}, {scalar_block(0.0, 3, 1.0)}, {}};
  try {
    solve_sdp(bad_var);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownVariable);
  }
  SdpProblem bad_dim{1, {1.0}, {LmiBlock{0, Matrix{}, {}}}, {}};
  EXPECT_THROW(solve_sdp(bad_dim), Error);
  SdpProblem bad_eq{1, {1.0}, {scalar_block(0.0, 0, 1.0)}, {{{{2, 1.0}}, 0.0}}};
  EXPECT_THROW(solve_sdp(bad_eq), Error);
}

TEST(Sdp, RandomProgramsPassIndependentVerifier) {
  GaussianStream g(51);
  for (int trial = 0; trial < 20; ++trial) {
    const SdpProblem p = test::random_sdp(g);
    const SdpSolution s = solve_sdp(p);
    ASSERT_EQ(s.status, SdpStatus::Optimal) << "trial " << trial;
    EXPECT_LE(std::max({s.primal_residual, s.dual_residual, s.gap}), 1e-8);
    const FeasibilityReport rep = verify_feasibility(p, s.x);
    EXPECT_LE(rep.equality_residual, 1e-8);
    EXPECT_GE(rep.min_eigenvalue, -1e-8);
    EXPECT_LE(test::check_kkt(p, s).worst(), 1e-7) << "trial " << trial;
  }
}

TEST(Sdp, ObjectiveScalingKeepsArgmin) {
  GaussianStream g(52);
  for (int trial = 0; trial < 8; ++trial) {
    SdpProblem p = test::random_sdp(g);
    const SdpOptions opt{.tol = 1e-12, .max_iter = 200};
    const SdpSolution a = solve_sdp(p, opt);
    for (double& c : p.objective) c *= 37.5;
    const SdpSolution b = solve_sdp(p, opt);
    ASSERT_EQ(a.status, SdpStatus::Optimal);
    ASSERT_EQ(b.status, SdpStatus::Optimal);
    double scale = 1.0;
    for (double v : a.x) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < a.x.size(); ++k) EXPECT_NEAR(a.x[k], b.x[k], 1e-6 * scale);
  }
}

TEST(Sdp, JsonDumpListsBlocksAndTerms) {
  LmiBlock b{2, Matrix{{0, 1}, {1, 0}}, {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}}};
  SdpProblem p{1, {1.0}, {b}, {{{{0, 2.0}}, 4.0}}};
  const auto j = sdp_problem_to_json(p);
  EXPECT_EQ(j.at("num_vars").get<int>(), 1);
  EXPECT_EQ(j.at("blocks").size(), 1u);
  EXPECT_EQ(j.at("equalities").size(), 1u);
}
