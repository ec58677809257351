#include "ddlqr/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddlqr/error.hpp"

namespace ddlqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix riccati_gain(const LtiSystem& sys, const LqrWeights& w, const Matrix& p) {
  const Matrix btp = transpose_times(sys.b(), p);
  const Matrix lhs = w.r() + btp * sys.b();
  return -solve_linear(lhs, btp * sys.a());
}

Matrix average_symmetric(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

LqrWeights::LqrWeights(Matrix q, Matrix r) {
  if (!is_positive_definite(q)) throw Error(ErrorCode::NotPositiveDefinite, "Q must be positive definite");
  if (!is_positive_definite(r)) throw Error(ErrorCode::NotPositiveDefinite, "R must be positive definite");
  q_ = symmetrize(q);
  r_ = symmetrize(r);
}

LqrWeights LqrWeights::scaled_identity(std::size_t n, std::size_t m, double q, double r) {
  return LqrWeights(q * Matrix::identity(n), r * Matrix::identity(m));
}

Matrix dlyap(const Matrix& m, const Matrix& c, const ToleranceConfig& tol) {
  if (!m.is_square() || c.rows() != m.rows() || c.cols() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "dlyap expects square M and C of equal size");
  }
  const Matrix cs = symmetrize(c, tol);
  if (spectral_radius(m, tol) >= 1.0) {
    throw Error(ErrorCode::Unstable, "dlyap requires a Schur-stable matrix");
  }
  const std::size_t n = m.rows();
  const Matrix lhs = Matrix::identity(n * n) - kron(m, m);
  const Matrix p = unvec(solve_linear(lhs, vec(cs), tol), n, n);
  return average_symmetric(p);
}

bool is_stabilizing(const LtiSystem& sys, const Matrix& k, const ToleranceConfig& tol) {
  return is_schur_stable(sys.closed_loop(k), tol);
}

double lqr_cost(const LtiSystem& sys, const LqrWeights& w, const Matrix& k, const ToleranceConfig& tol) {
  if (w.q().rows() != sys.n() || w.r().rows() != sys.m()) {
    throw Error(ErrorCode::DimensionMismatch, "weights do not match the system");
  }
  const Matrix acl = sys.closed_loop(k);
  if (!is_schur_stable(acl, tol)) return kInf;
  const Matrix p = dlyap(acl, Matrix::identity(sys.n()), tol);
  return inner(w.q(), p) + inner(transpose_times(k, w.r() * k), p);
}

double dare_residual(const LtiSystem& sys, const LqrWeights& w, const Matrix& p) {
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();
  const Matrix atp = transpose_times(a, p);
  const Matrix btpa = transpose_times(b, p * a);
  const Matrix gain_term = transpose_times(btpa, solve_linear(w.r() + transpose_times(b, p * b), btpa));
  const Matrix res = p - w.q() - atp * a + gain_term;
  return res.frobenius_norm() / std::max(1.0, p.frobenius_norm());
}

DareSolution dare_solve(const LtiSystem& sys, const LqrWeights& w, const ToleranceConfig& tol) {
  const std::size_t n = sys.n();
  if (w.q().rows() != n || w.r().rows() != sys.m()) {
    throw Error(ErrorCode::DimensionMismatch, "weights do not match the system");
  }
  Matrix ak = sys.a();
  Matrix g = sys.b() * solve_linear(w.r(), sys.b().transpose());
  Matrix h = w.q();
  const Matrix eye = Matrix::identity(n);
  int it = 0;
  bool converged = false;
  try {
    for (; it < 100 && !converged; ++it) {
      const LuFactorization lu(eye + g * h, tol);
      const Matrix winv_a = lu.solve(ak);
      const Matrix winv_g = lu.solve(g);
      Matrix h_next = h + transpose_times(ak, h * winv_a);
      Matrix g_next = g + times_transpose(ak * winv_g, ak);
      ak = ak * winv_a;
      h_next = average_symmetric(h_next);
      g = average_symmetric(g_next);
      if (!h_next.all_finite() || !g.all_finite() || !ak.all_finite()) break;
      converged = (h_next - h).frobenius_norm() <= 1e-12 * h_next.frobenius_norm();
      h = std::move(h_next);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Singular && e.code() != ErrorCode::NonFinite) throw;
    converged = false;
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, "Riccati doubling iteration did not converge");
  }

  DareSolution sol{h, riccati_gain(sys, w, h), 0.0, it};
  if (!is_stabilizing(sys, sol.k, tol)) {
    throw Error(ErrorCode::NoConvergence, "Riccati solution is not stabilizing");
  }
  sol.residual = dare_residual(sys, w, sol.p);
  // Newton–Hewer polishing: P ← Lyapunov solution for the current gain.
  for (int polish = 0; polish < 3 && sol.residual > 1e-14; ++polish) {
    const Matrix acl = sys.closed_loop(sol.k);
    const Matrix p = dlyap(acl.transpose(), w.q() + transpose_times(sol.k, w.r() * sol.k), tol);
    const Matrix k = riccati_gain(sys, w, p);
    if (!is_stabilizing(sys, k, tol)) break;
    const double r = dare_residual(sys, w, p);
    if (!(r < sol.residual)) break;
    sol.p = p;
    sol.k = k;
    sol.residual = r;
  }
  return sol;
}

double optimality_gap_from_cost(double cost, double optimal_cost) {
  if (!std::isfinite(cost)) return kInf;
  return (cost - optimal_cost) / optimal_cost;
}

double optimality_gap(const LtiSystem& sys, const LqrWeights& w, const Matrix& k, const Matrix& kstar,
                      const ToleranceConfig& tol) {
  const double jstar = lqr_cost(sys, w, kstar, tol);
  if (!std::isfinite(jstar)) throw Error(ErrorCode::Unstable, "reference gain is not stabilizing");
  return optimality_gap_from_cost(lqr_cost(sys, w, k, tol), jstar);
}

GainResult lqr_riccati(const LtiSystem& sys, const LqrWeights& w, const ToleranceConfig& tol) {
  const DareSolution dare = dare_solve(sys, w, tol);
  GainResult out;
  out.k = dare.k;
  out.p = dlyap(sys.closed_loop(dare.k), Matrix::identity(sys.n()), tol);
  out.cost = inner(w.q(), out.p) + inner(transpose_times(out.k, w.r() * out.k), out.p);
  out.stabilizing = true;
  out.diagnostics.method = "riccati";
  out.diagnostics.status = "Converged";
  out.diagnostics.iterations = dare.iterations;
  out.diagnostics.riccati_residual = dare.residual;
  return out;
}

}  // namespace ddlqr
