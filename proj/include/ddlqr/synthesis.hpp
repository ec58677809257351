#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddlqr/error.hpp"
#include "ddlqr/gain.hpp"
#include "ddlqr/linalg.hpp"
#include "ddlqr/lqr.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/sdp.hpp"

namespace ddlqr {

enum class SynthesisMethod {
  ModelBased,
  IndirectLS,
  IndirectTikhonov,
  DirectCov,
  DirectCovOmega,
  DirectRidge,
  DirectMixed,
};

/// Kebab-case names: model-based, indirect-ls, indirect-tikhonov, direct-cov,
/// direct-cov-omega, direct-ridge, direct-mixed.
std::string_view to_string(SynthesisMethod m);
/// Also accepts "indirect" (LS when γ = 0, Tikhonov otherwise; resolved by
/// the caller through resolve_method).
std::optional<SynthesisMethod> parse_method(std::string_view name);
SynthesisMethod resolve_method(std::string_view name, double gamma);

struct SynthesisOptions {
  SdpOptions sdp{.tol = 1e-12, .max_iter = 200};
  /// Looser tolerances tried in order when a solve stalls short of sdp.tol
  /// on a badly conditioned instance. Entries not above sdp.tol are skipped.
  std::vector<double> fallback_tols{1e-10, 1e-9, 1e-8};
  ToleranceConfig tol{};
  /// Evaluate the Ω regularizer with Ψ instead of Φ in the mixed program.
  bool omega_uses_psi = false;
};

struct SynthesisSpec {
  SynthesisMethod method = SynthesisMethod::DirectRidge;
  double lambda = 0.0;
  double gamma = 0.0;
  LqrWeights weights = LqrWeights(Matrix{{1.0}}, Matrix{{1.0}});
  SynthesisOptions options{};
};

/// Raised when a conic program does not return Optimal. Carries the solver
/// status so callers can tell infeasibility from numerical trouble.
class SolverFailure : public Error {
 public:
  SolverFailure(std::string status, const std::string& what)
      : Error(ErrorCode::SolverFailed, what), status_(std::move(status)) {}
  /// SdpStatus name, or "NoConvergence" for the Riccati route.
  const std::string& status() const noexcept { return status_; }

 private:
  std::string status_;
};

/// Model-based LQR through the LMI
///   min Tr(QP) + Tr(RL)  s.t.  [[P − I, AP + BY], [·, P]] ⪰ 0,
///                              [[L, Y], [Yᵀ, P]] ⪰ 0,
/// with K = Y·P⁻¹.
GainResult synth_model_based(const LtiSystem& sys, const LqrWeights& w, const SynthesisOptions& opt = {});

/// Certainty equivalence: identify (Â, B̂) by least squares (γ = 0) or
/// ridge regression (γ > 0), then solve the DARE for the estimate.
GainResult synth_indirect(const DataRecord& rec, const LqrWeights& w, double gamma,
                          const SynthesisOptions& opt = {});

/// Ridge-regularized covariance program (uses cov.psi and cov.gamma):
///   min Tr(QP) + Tr(RL)
///   s.t. Ψ₂Y = P, [[P − I, X̄1Y], [·, P]] ⪰ 0, [[L, Ψ₁Y], [·, P]] ⪰ 0,
/// with K = Ψ₁·Y·P⁻¹ and Ξ = Y·P⁻¹.
GainResult synth_direct_ridge(const CovarianceData& cov, const LqrWeights& w, const SynthesisOptions& opt = {});

/// Unregularized covariance parameterization (Ψ replaced by Φ) with the
/// optional Ω-penalty λ·Tr(V·P·Vᵀ·Φ). Requires Φ positive definite.
GainResult synth_direct_cov(const CovarianceData& cov, const LqrWeights& w, double lambda,
                            const SynthesisOptions& opt = {});

/// Ridge program plus λ·Ω(Ξ) with Ω(Ξ) = Tr(Ξ·P·Ξᵀ·Φ) (Ψ in place of Φ when
/// opt.omega_uses_psi is set).
GainResult synth_direct_mixed(const CovarianceData& cov, const LqrWeights& w, double lambda,
                              const SynthesisOptions& opt = {});

/// Dispatches on spec.method. ModelBased requires `truth`. When `truth` is
/// given, the result's cost and stabilizing verdict refer to it.
GainResult synthesize(const DataRecord& rec, const SynthesisSpec& spec,
                      const std::optional<LtiSystem>& truth = std::nullopt);

/// Sets result.stabilizing and result.cost = J(K) on the given plant.
void evaluate_on(GainResult& result, const LtiSystem& truth, const LqrWeights& w,
                 const ToleranceConfig& tol = {});

}  // namespace ddlqr
