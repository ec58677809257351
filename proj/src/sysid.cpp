#include "ddlqr/sysid.hpp"

#include <cmath>
#include <string>

#include "ddlqr/error.hpp"

namespace ddlqr {

namespace {

IdentifiedModel regress(const DataRecord& rec, double gamma, const ToleranceConfig& tol) {
  const std::size_t n = rec.n(), m = rec.m();
  const Matrix d0 = rec.d0();
  const Matrix gram = times_transpose(d0, d0);
  const Matrix shifted = gram + gamma * Matrix::identity(n + m);

  IdentifiedModel out;
  out.gamma = gamma;
  out.rank_d0 = numerical_rank(d0, tol);
  out.cond_gram = condition_number(gram, tol);
  out.cond_shifted = condition_number(shifted, tol);

  // Solve (D0D0ᵀ + γI)·Θᵀ = D0·X1ᵀ for Θ = [B̂ Â].
  const Matrix theta = cholesky_solve(cholesky(shifted, tol), times_transpose(d0, rec.x1)).transpose();
  out.b_hat = theta.block(0, 0, n, m);
  out.a_hat = theta.block(0, m, n, n);
  out.residual = (rec.x1 - theta * d0).frobenius_norm();
  return out;
}

}  // namespace

IdentifiedModel least_squares(const DataRecord& rec, const ToleranceConfig& tol) {
  rec.validate();
  const std::size_t rank = numerical_rank(rec.d0(), tol);
  if (rank < rec.n() + rec.m()) {
    throw Error(ErrorCode::RankDeficient, "rank(D0) = " + std::to_string(rank) + " < n + m = " +
                                              std::to_string(rec.n() + rec.m()));
  }
  try {
    return regress(rec, 0.0, tol);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotPositiveDefinite) {
      throw Error(ErrorCode::RankDeficient, "D0·D0ᵀ is numerically singular");
    }
    throw;
  }
}

IdentifiedModel tikhonov(const DataRecord& rec, double gamma, const ToleranceConfig& tol) {
  rec.validate();
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidArgument, "ridge weight must be positive");
  }
  return regress(rec, gamma, tol);
}

}  // namespace ddlqr
