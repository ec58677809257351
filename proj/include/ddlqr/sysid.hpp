#pragma once

#include "ddlqr/linalg.hpp"
#include "ddlqr/lti.hpp"

namespace ddlqr {

struct IdentifiedModel {
  Matrix a_hat;  // n × n
  Matrix b_hat;  // n × m
  double gamma = 0.0;
  double residual = 0.0;          // ‖X1 − [B̂ Â]·D0‖_F
  double cond_gram = 0.0;         // cond(D0·D0ᵀ)
  double cond_shifted = 0.0;      // cond(D0·D0ᵀ + γI)
  std::size_t rank_d0 = 0;

  LtiSystem system() const { return LtiSystem(a_hat, b_hat); }
};

/// [B̂ Â] = X1·D0ᵀ·(D0·D0ᵀ)⁻¹. Throws RankDeficient unless rank(D0) = n + m.
IdentifiedModel least_squares(const DataRecord& rec, const ToleranceConfig& tol = {});

/// Ridge estimate [B̂ Â] = X1·D0ᵀ·(D0·D0ᵀ + γI)⁻¹ for γ > 0; any rank of D0.
IdentifiedModel tikhonov(const DataRecord& rec, double gamma, const ToleranceConfig& tol = {});

}  // namespace ddlqr
