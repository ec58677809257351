#include "ddlqr/synthesis.hpp"

#include <array>
#include <cmath>
#include <string>

#include "ddlqr/lmi.hpp"
#include "ddlqr/sysid.hpp"

namespace ddlqr {

namespace {

constexpr std::array<std::pair<SynthesisMethod, std::string_view>, 7> kMethodNames{{
    {SynthesisMethod::ModelBased, "model-based"},
    {SynthesisMethod::IndirectLS, "indirect-ls"},
    {SynthesisMethod::IndirectTikhonov, "indirect-tikhonov"},
    {SynthesisMethod::DirectCov, "direct-cov"},
    {SynthesisMethod::DirectCovOmega, "direct-cov-omega"},
    {SynthesisMethod::DirectRidge, "direct-ridge"},
    {SynthesisMethod::DirectMixed, "direct-mixed"},
}};

void check_weights(const LqrWeights& w, std::size_t n, std::size_t m) {
  if (w.q().rows() != n || w.r().rows() != m) {
    throw Error(ErrorCode::DimensionMismatch, "weights are " + std::to_string(w.q().rows()) + "/" +
                                                  std::to_string(w.r().rows()) + " but the problem has n = " +
                                                  std::to_string(n) + ", m = " + std::to_string(m));
  }
}

void check_coefficient(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be a finite nonnegative number");
  }
}

SdpSolution solve_or_throw(const LmiBuilder& b, const SynthesisOptions& opt, std::string_view method) {
  const SdpProblem problem = b.build();
  SdpSolution sol = solve_sdp(problem, opt.sdp);
  for (const double tol : opt.fallback_tols) {
    if (sol.status != SdpStatus::NumericalFailure) break;
    if (tol > opt.sdp.tol) sol = solve_sdp(problem, SdpOptions{.tol = tol, .max_iter = opt.sdp.max_iter});
  }
  if (sol.status != SdpStatus::Optimal) {
    throw SolverFailure(std::string(to_string(sol.status)),
                        std::string(method) + ": conic solver returned " + std::string(to_string(sol.status)));
  }
  return sol;
}

void fill_diagnostics(SolverDiagnostics& d, const SdpSolution& sol, std::string_view method) {
  d.method = std::string(method);
  d.status = std::string(to_string(sol.status));
  d.iterations = sol.iterations;
  d.primal_residual = sol.primal_residual;
  d.dual_residual = sol.dual_residual;
  d.gap = sol.gap;
}

/// K·P = G  ⇒  K = G·P⁻¹ for symmetric positive definite P.
Matrix right_divide(const Matrix& g, const Matrix& p, const ToleranceConfig& tol) {
  return cholesky_solve(cholesky(p, tol), g.transpose()).transpose();
}

/// The covariance-parameterized program shared by every direct method.
/// `param` plays the role of Ψ (or Φ at γ = 0); `omega` is the matrix inside
/// the Ω penalty and is used only when lambda > 0.
GainResult covariance_program(const CovarianceData& cov, const Matrix& param, const Matrix& omega, double lambda,
                              const LqrWeights& w, const SynthesisOptions& opt, std::string_view method) {
  const std::size_t n = cov.n(), m = cov.m();
  check_weights(w, n, m);
  const Matrix param1 = param.block(0, 0, m, n + m);
  const Matrix param2 = param.block(m, 0, n, n + m);

  LmiBuilder b;
  const AffineExpr p = b.add_symmetric("P", n);
  const AffineExpr y = b.add_matrix("Y", n + m, n);
  const AffineExpr l = b.add_symmetric("L", m);

  b.add_equality(param2 * y - p, Matrix(n, n));
  const AffineExpr cl = cov.xbar1 * y;
  b.add_psd(AffineExpr::block_matrix({{p - Matrix::identity(n), cl}, {cl.transpose(), p}}));
  const AffineExpr ky = param1 * y;
  b.add_psd(AffineExpr::block_matrix({{l, ky}, {ky.transpose(), p}}));
  AffineExpr objective = trace_product(w.q(), p) + trace_product(w.r(), l);

  if (lambda > 0.0) {
    const AffineExpr mm = b.add_symmetric("M", n + m);
    const AffineExpr sy = sqrt_psd(omega, opt.tol) * y;
    b.add_psd(AffineExpr::block_matrix({{mm, sy}, {sy.transpose(), p}}));
    objective += lambda * trace(mm);
  }
  b.minimize(objective);

  const SdpSolution sol = solve_or_throw(b, opt, method);
  ParamCertificate cert;
  cert.p = symmetrize(p.evaluate(sol.x), opt.tol);
  cert.y = y.evaluate(sol.x);
  cert.l = symmetrize(l.evaluate(sol.x), opt.tol);
  cert.xi = right_divide(cert.y, cert.p, opt.tol);
  cert.k = right_divide(param1 * cert.y, cert.p, opt.tol);

  GainResult out;
  out.k = cert.k;
  out.p = cert.p;
  out.cost = inner(w.q(), cert.p) + inner(w.r(), cert.l);
  fill_diagnostics(out.diagnostics, sol, method);
  out.certificate = std::move(cert);
  return out;
}

void require_full_rank(const CovarianceData& cov, std::string_view what) {
  if (cov.rank_d0 < cov.n() + cov.m()) {
    throw Error(ErrorCode::RankDeficient, std::string(what) + ": rank(D0) = " + std::to_string(cov.rank_d0) +
                                              " < n + m = " + std::to_string(cov.n() + cov.m()));
  }
}

}  // namespace

std::string_view to_string(SynthesisMethod m) {
  for (const auto& [id, name] : kMethodNames)
    if (id == m) return name;
  return "unknown";
}

std::optional<SynthesisMethod> parse_method(std::string_view name) {
  for (const auto& [id, n] : kMethodNames)
    if (n == name) return id;
  if (name == "indirect") return SynthesisMethod::IndirectLS;
  return std::nullopt;
}

SynthesisMethod resolve_method(std::string_view name, double gamma) {
  if (name == "indirect") return gamma > 0.0 ? SynthesisMethod::IndirectTikhonov : SynthesisMethod::IndirectLS;
  const auto m = parse_method(name);
  if (!m) throw Error(ErrorCode::InvalidArgument, "unknown synthesis method '" + std::string(name) + "'");
  return *m;
}

GainResult synth_model_based(const LtiSystem& sys, const LqrWeights& w, const SynthesisOptions& opt) {
  const std::size_t n = sys.n(), m = sys.m();
  check_weights(w, n, m);
  LmiBuilder b;
  const AffineExpr p = b.add_symmetric("P", n);
  const AffineExpr y = b.add_matrix("Y", m, n);
  const AffineExpr l = b.add_symmetric("L", m);
  const AffineExpr cl = sys.a() * p + sys.b() * y;
  b.add_psd(AffineExpr::block_matrix({{p - Matrix::identity(n), cl}, {cl.transpose(), p}}));
  b.add_psd(AffineExpr::block_matrix({{l, y}, {y.transpose(), p}}));
  b.minimize(trace_product(w.q(), p) + trace_product(w.r(), l));

  const SdpSolution sol = solve_or_throw(b, opt, "model-based");
  GainResult out;
  out.p = symmetrize(p.evaluate(sol.x), opt.tol);
  out.k = right_divide(y.evaluate(sol.x), out.p, opt.tol);
  out.cost = inner(w.q(), out.p) + inner(w.r(), l.evaluate(sol.x));
  fill_diagnostics(out.diagnostics, sol, "model-based");
  out.stabilizing = is_stabilizing(sys, out.k, opt.tol);
  return out;
}

GainResult synth_indirect(const DataRecord& rec, const LqrWeights& w, double gamma, const SynthesisOptions& opt) {
  check_coefficient(gamma, "gamma");
  check_weights(w, rec.n(), rec.m());
  const IdentifiedModel model = gamma > 0.0 ? tikhonov(rec, gamma, opt.tol) : least_squares(rec, opt.tol);
  const std::string_view method = gamma > 0.0 ? "indirect-tikhonov" : "indirect-ls";
  GainResult out;
  try {
    out = lqr_riccati(model.system(), w, opt.tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoConvergence || e.code() == ErrorCode::Unstable ||
        e.code() == ErrorCode::Singular) {
      throw SolverFailure("NoConvergence", std::string(method) + ": " + e.what());
    }
    throw;
  }
  out.stabilizing.reset();
  out.diagnostics.method = std::string(method);
  return out;
}

GainResult synth_direct_ridge(const CovarianceData& cov, const LqrWeights& w, const SynthesisOptions& opt) {
  if (cov.gamma == 0.0) require_full_rank(cov, "direct-ridge");
  return covariance_program(cov, cov.psi, cov.phi, 0.0, w, opt, "direct-ridge");
}

GainResult synth_direct_cov(const CovarianceData& cov, const LqrWeights& w, double lambda,
                            const SynthesisOptions& opt) {
  check_coefficient(lambda, "lambda");
  require_full_rank(cov, "direct-cov");
  return covariance_program(cov, cov.phi, cov.phi, lambda, w, opt, lambda > 0.0 ? "direct-cov-omega" : "direct-cov");
}

GainResult synth_direct_mixed(const CovarianceData& cov, const LqrWeights& w, double lambda,
                              const SynthesisOptions& opt) {
  check_coefficient(lambda, "lambda");
  if (cov.gamma == 0.0) require_full_rank(cov, "direct-mixed");
  return covariance_program(cov, cov.psi, opt.omega_uses_psi ? cov.psi : cov.phi, lambda, w, opt, "direct-mixed");
}

GainResult synthesize(const DataRecord& rec, const SynthesisSpec& spec, const std::optional<LtiSystem>& truth) {
  check_coefficient(spec.lambda, "lambda");
  check_coefficient(spec.gamma, "gamma");
  const SynthesisOptions& opt = spec.options;
  GainResult out;
  switch (spec.method) {
    case SynthesisMethod::ModelBased:
      if (!truth) throw Error(ErrorCode::InvalidArgument, "model-based synthesis needs the system matrices");
      out = synth_model_based(*truth, spec.weights, opt);
      break;
    case SynthesisMethod::IndirectLS:
      out = synth_indirect(rec, spec.weights, 0.0, opt);
      break;
    case SynthesisMethod::IndirectTikhonov:
      if (!(spec.gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "indirect-tikhonov needs gamma > 0");
      out = synth_indirect(rec, spec.weights, spec.gamma, opt);
      break;
    case SynthesisMethod::DirectCov:
      out = synth_direct_cov(covariances(rec, 0.0, opt.tol), spec.weights, 0.0, opt);
      break;
    case SynthesisMethod::DirectCovOmega:
      out = synth_direct_cov(covariances(rec, 0.0, opt.tol), spec.weights, spec.lambda, opt);
      break;
    case SynthesisMethod::DirectRidge:
      out = synth_direct_ridge(covariances(rec, spec.gamma, opt.tol), spec.weights, opt);
      break;
    case SynthesisMethod::DirectMixed:
      out = synth_direct_mixed(covariances(rec, spec.gamma, opt.tol), spec.weights, spec.lambda, opt);
      break;
  }
  if (truth) evaluate_on(out, *truth, spec.weights, opt.tol);
  return out;
}

void evaluate_on(GainResult& result, const LtiSystem& truth, const LqrWeights& w, const ToleranceConfig& tol) {
  result.stabilizing = is_stabilizing(truth, result.k, tol);
  result.cost = lqr_cost(truth, w, result.k, tol);
}

}  // namespace ddlqr
