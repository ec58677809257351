#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "ddlqr/matrix.hpp"

namespace ddlqr {

/// Decision variables of the covariance-parameterized programs.
/// `xi` is Ξ = Y·P⁻¹ (V when the program is unregularized, γ = 0).
struct ParamCertificate {
  Matrix xi;  // (n+m) × n
  Matrix y;   // (n+m) × n
  Matrix p;   // n × n
  Matrix l;   // m × m
  Matrix k;   // m × n
};

struct SolverDiagnostics {
  std::string method;
  std::string status;  // "Optimal", "Infeasible", "Unbounded", "NumericalFailure", "Converged"
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double riccati_residual = 0.0;  // DARE routes only
};

struct GainResult {
  Matrix k;                              // m × n, u = K x
  Matrix p;                              // n × n certificate
  double cost = 0.0;                     // J(K) on the true plant when known, else on the design model
  std::optional<bool> stabilizing;       // verdict against the true plant; absent for ingested data
  SolverDiagnostics diagnostics;
  std::optional<ParamCertificate> certificate;
};

}  // namespace ddlqr
