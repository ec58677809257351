#pragma once

#include "ddlqr/gain.hpp"
#include "ddlqr/linalg.hpp"
#include "ddlqr/lti.hpp"

namespace ddlqr {

/// Stage cost weights; both must be symmetric positive definite.
class LqrWeights {
 public:
  LqrWeights(Matrix q, Matrix r);

  /// Q = q·I_n, R = r·I_m
  static LqrWeights scaled_identity(std::size_t n, std::size_t m, double q, double r);

  const Matrix& q() const noexcept { return q_; }
  const Matrix& r() const noexcept { return r_; }

 private:
  Matrix q_;
  Matrix r_;
};

/// P = C + M·P·Mᵀ for Schur-stable M, via the Kronecker system
/// (I − M⊗M)·vec(P) = vec(C).
Matrix dlyap(const Matrix& m, const Matrix& c, const ToleranceConfig& tol = {});

/// J(K) = Tr(Q·P + Kᵀ·R·K·P) with P = I + (A+BK)·P·(A+BK)ᵀ; +infinity when
/// A+BK is not Schur stable.
double lqr_cost(const LtiSystem& sys, const LqrWeights& w, const Matrix& k,
                const ToleranceConfig& tol = {});

bool is_stabilizing(const LtiSystem& sys, const Matrix& k, const ToleranceConfig& tol = {});

struct DareSolution {
  Matrix p;  // stabilizing DARE solution
  Matrix k;  // −(R + BᵀPB)⁻¹BᵀPA
  double residual = 0.0;  // relative DARE residual
  int iterations = 0;
};

/// Stabilizing solution of P = Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA.
///
/// Doubling iteration (structure-preserving doubling), finished with
/// Newton–Hewer polishing steps. Throws NoConvergence when the iteration
/// stalls or the resulting gain is not stabilizing, which is how
/// non-stabilizable pairs surface.
DareSolution dare_solve(const LtiSystem& sys, const LqrWeights& w, const ToleranceConfig& tol = {});

/// Relative DARE residual ‖P − Q − AᵀPA + AᵀPB(R+BᵀPB)⁻¹BᵀPA‖_F / max(1, ‖P‖_F).
double dare_residual(const LtiSystem& sys, const LqrWeights& w, const Matrix& p);

/// (J(K) − J(K*)) / J(K*); +infinity when K is not stabilizing.
double optimality_gap(const LtiSystem& sys, const LqrWeights& w, const Matrix& k, const Matrix& kstar,
                      const ToleranceConfig& tol = {});

/// Same, against a precomputed J(K*).
double optimality_gap_from_cost(double cost, double optimal_cost);

/// Model-based optimum bundled as a GainResult (Riccati route).
GainResult lqr_riccati(const LtiSystem& sys, const LqrWeights& w, const ToleranceConfig& tol = {});

}  // namespace ddlqr
