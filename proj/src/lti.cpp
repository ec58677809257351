#include "ddlqr/lti.hpp"

#include <cmath>
#include <string>

#include "ddlqr/error.hpp"
#include "ddlqr/random.hpp"

namespace ddlqr {

LtiSystem::LtiSystem(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)) {
  if (!a_.is_square()) throw Error(ErrorCode::DimensionMismatch, "A must be square");
  if (b_.rows() != a_.rows()) throw Error(ErrorCode::DimensionMismatch, "B must have n rows");
  if (!a_.all_finite() || !b_.all_finite()) throw Error(ErrorCode::NonFinite, "system matrices");
}

Matrix LtiSystem::closed_loop(const Matrix& k) const {
  if (k.rows() != m() || k.cols() != n()) {
    throw Error(ErrorCode::DimensionMismatch, "gain must be m x n");
  }
  return a_ + b_ * k;
}

LtiSystem benchmark_plant() {
  Matrix a{{0.99, 0.01, 0.02, 0.0},
           {0.02, 0.98, 0.01, 0.0},
           {0.01, 0.03, 0.97, 0.01},
           {0.0, 0.01, 0.02, 0.95}};
  Matrix b{{1.0}, {0.0}, {0.0}, {0.0}};
  return LtiSystem(std::move(a), std::move(b));
}

void DataRecord::validate() const {
  const std::size_t t = x0.cols();
  if (t == 0) throw Error(ErrorCode::DimensionMismatch, "data record needs T >= 1");
  if (u0.cols() != t || x1.cols() != t) {
    throw Error(ErrorCode::DimensionMismatch, "U0, X0, X1 must share the same number of columns");
  }
  if (x1.rows() != x0.rows()) throw Error(ErrorCode::DimensionMismatch, "X0 and X1 row counts differ");
  if (w0 && (w0->rows() != x0.rows() || w0->cols() != t)) {
    throw Error(ErrorCode::DimensionMismatch, "W0 shape");
  }
}

namespace {

DataRecord roll_out(const LtiSystem& sys, Matrix x, const Matrix& u0, const Matrix& w0) {
  const std::size_t n = sys.n();
  const std::size_t t = u0.cols();
  DataRecord rec{u0, Matrix(n, t), Matrix(n, t), w0};
  for (std::size_t k = 0; k < t; ++k) {
    const Matrix next = sys.a() * x + sys.b() * u0.col(k) + w0.col(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(std::abs(next(i, 0)) <= kDivergenceThreshold)) {
        throw Error(ErrorCode::TrajectoryDiverged,
                    "state magnitude exceeded 1e12 at step " + std::to_string(k + 1));
      }
    }
    rec.x0.set_block(0, k, x);
    rec.x1.set_block(0, k, next);
    x = next;
  }
  return rec;
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a finite nonnegative number");
  }
}

}  // namespace

DataRecord simulate_and_collect(const LtiSystem& sys, const NoiseSpec& noise, double input_std,
                                std::size_t horizon) {
  require_nonnegative(noise.sigma_x, "sigma_x");
  require_nonnegative(noise.sigma_w, "sigma_w");
  require_nonnegative(input_std, "input_std");
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  const std::size_t n = sys.n(), m = sys.m();
  GaussianStream rng(noise.seed);
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = noise.sigma_x * rng.normal();
  Matrix u0(m, horizon), w0(n, horizon);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j < m; ++j) u0(j, k) = input_std * rng.normal();
    for (std::size_t i = 0; i < n; ++i) w0(i, k) = noise.sigma_w * rng.normal();
  }
  return roll_out(sys, std::move(x), u0, w0);
}

DataRecord simulate_with_inputs(const LtiSystem& sys, const Matrix& x_initial, const Matrix& u0,
                                const NoiseSpec& noise) {
  require_nonnegative(noise.sigma_w, "sigma_w");
  if (x_initial.rows() != sys.n() || x_initial.cols() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "x(0) must be n x 1");
  }
  if (u0.rows() != sys.m() || u0.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "U0 must be m x T with T >= 1");
  }
  GaussianStream rng(noise.seed);
  Matrix w0(sys.n(), u0.cols());
  for (std::size_t k = 0; k < u0.cols(); ++k)
    for (std::size_t i = 0; i < sys.n(); ++i) w0(i, k) = noise.sigma_w * rng.normal();
  return roll_out(sys, x_initial, u0, w0);
}

CovarianceData covariances(const DataRecord& rec, double gamma, const ToleranceConfig& tol) {
  rec.validate();
  require_nonnegative(gamma, "gamma");
  const std::size_t n = rec.n(), m = rec.m();
  const double t = static_cast<double>(rec.horizon());
  const Matrix d0 = rec.d0();
  const Matrix gram = times_transpose(d0, d0);

  CovarianceData cov;
  cov.gamma = gamma;
  cov.horizon = rec.horizon();
  cov.phi = symmetrize(gram * (1.0 / t), tol);
  cov.psi = symmetrize((gram + gamma * Matrix::identity(n + m)) * (1.0 / t), tol);
  cov.psi1 = cov.psi.block(0, 0, m, n + m);
  cov.psi2 = cov.psi.block(m, 0, n, n + m);
  cov.ubar0 = times_transpose(rec.u0, d0) * (1.0 / t);
  cov.xbar0 = times_transpose(rec.x0, d0) * (1.0 / t);
  cov.xbar1 = times_transpose(rec.x1, d0) * (1.0 / t);
  if (rec.w0) cov.wbar0 = times_transpose(*rec.w0, d0) * (1.0 / t);
  cov.rank_d0 = numerical_rank(d0, tol);
  cov.cond_gram = condition_number(gram, tol);
  return cov;
}

}  // namespace ddlqr
