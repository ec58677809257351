#pragma once

#include <algorithm>

#include "ddlqr/gain.hpp"
#include "ddlqr/linalg.hpp"
#include "ddlqr/lti.hpp"

namespace ddlqr::test {

struct CertificateErrors {
  double equality = 0.0;       // ‖Ψ₂Y − P‖_F / max(1, ‖P‖_F)
  double schur_min_eig = 0.0;  // smallest eigenvalue over both Schur blocks, divided by max(1, ‖block‖_F)
  double gain = 0.0;           // ‖Ψ₁YP⁻¹ − K‖_F / max(1, ‖K‖_F)
  double parameterization = 0.0;  // ‖Ψ·Ξ − [K; I]‖_F / max(1, ‖K‖_F)
};

// `param` is the matrix of the parameterization: Ψ for ridge programs, Φ for
// the unregularized ones.
inline CertificateErrors certificate_errors(const CovarianceData& cov, const Matrix& param, const GainResult& g) {
  const ParamCertificate& c = *g.certificate;
  const std::size_t n = cov.n(), m = cov.m();
  const Matrix param1 = param.block(0, 0, m, n + m);
  const Matrix param2 = param.block(m, 0, n, n + m);
  CertificateErrors e;
  e.equality = (param2 * c.y - c.p).frobenius_norm() / std::max(1.0, c.p.frobenius_norm());

  const auto block = [](const Matrix& a, const Matrix& b, const Matrix& d) {
    Matrix out(a.rows() + d.rows(), a.cols() + d.cols());
    out.set_block(0, 0, a);
    out.set_block(0, a.cols(), b);
    out.set_block(a.rows(), 0, b.transpose());
    out.set_block(a.rows(), a.cols(), d);
    return out;
  };
  const Matrix s1 = block(c.p - Matrix::identity(n), cov.xbar1 * c.y, c.p);
  const Matrix s2 = block(c.l, param1 * c.y, c.p);
  e.schur_min_eig = std::min(min_eigenvalue(0.5 * (s1 + s1.transpose())) / std::max(1.0, s1.frobenius_norm()),
                             min_eigenvalue(0.5 * (s2 + s2.transpose())) / std::max(1.0, s2.frobenius_norm()));

  const Matrix k = solve_linear(c.p, (param1 * c.y).transpose()).transpose();
  const double kscale = std::max(1.0, g.k.frobenius_norm());
  e.gain = (k - g.k).frobenius_norm() / kscale;
  const Matrix stacked = vstack(g.k, Matrix::identity(n));
  e.parameterization = (param * c.xi - stacked).frobenius_norm() / kscale;
  return e;
}

}  // namespace ddlqr::test
