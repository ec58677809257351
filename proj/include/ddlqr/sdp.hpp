#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "ddlqr/matrix.hpp"

namespace ddlqr {

/// Affine symmetric block F0 + Σ_k x_k·F_k constrained to be PSD.
/// Each term adds `value·x_var` at (row, col) and, off the diagonal, at
/// (col, row). Terms with the same (var, row, col) accumulate.
struct LmiBlock {
  struct Term {
    std::size_t var;
    std::size_t row;
    std::size_t col;
    double value;
  };
  std::size_t dim = 0;
  Matrix constant;  // F0, symmetric dim × dim
  std::vector<Term> terms;
};

struct LinearEquality {
  std::vector<std::pair<std::size_t, double>> coeffs;  // (var, coefficient)
  double rhs = 0.0;
};

/// minimize cᵀx  subject to  F_j(x) ⪰ 0 for every block, a_iᵀx = b_i.
///
/// This is the inequality ("dual") standard form; its conic dual is
///   maximize −Σ⟨F0_j, Z_j⟩ − bᵀy  s.t.  Σ_j F_jᵀ(Z_j) = c + Aᵀy,  Z_j ⪰ 0
/// up to sign conventions, i.e. the usual primal form over a product of
/// PSD cones with free multipliers.
struct SdpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;  // length num_vars
  std::vector<LmiBlock> blocks;
  std::vector<LinearEquality> equalities;

  /// Throws UnknownVariable for out-of-range variable indices and
  /// DimensionMismatch for malformed blocks.
  void validate() const;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string_view to_string(SdpStatus s);

struct SdpOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<double> x;
  std::vector<Matrix> slacks;     // F_j(x)
  std::vector<Matrix> duals;      // Z_j
  std::vector<double> eq_duals;   // multipliers of the equalities
  double objective = 0.0;
  double primal_residual = 0.0;   // relative equality + slack residual
  double dual_residual = 0.0;     // relative stationarity residual
  double gap = 0.0;               // ⟨S, Z⟩ / max(1, |cᵀx|)
  double certificate_residual = 0.0;  // infeasibility certificate quality, when applicable
  int iterations = 0;
};

/// Homogeneous self-dual interior-point method with Nesterov–Todd scaling
/// and Mehrotra predictor–corrector steps.
SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& options = {});

struct FeasibilityReport {
  double equality_residual = 0.0;  // max_i |a_iᵀx − b_i| / max(1, |b_i|)
  double min_eigenvalue = 0.0;     // smallest eigenvalue over all blocks F_j(x)
};

/// Recomputes constraint values at x from the problem data alone.
FeasibilityReport verify_feasibility(const SdpProblem& problem, const std::vector<double>& x);

/// F_j(x) assembled from the block's constant and terms.
Matrix evaluate_block(const LmiBlock& block, const std::vector<double>& x);

}  // namespace ddlqr
