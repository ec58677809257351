#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "ddlqr/lti.hpp"
#include "ddlqr/matrix.hpp"
#include "ddlqr/random.hpp"

namespace ddlqr::test {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, GaussianStream& g, double scale = 1.0) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = scale * g.normal();
  return m;
}

// S·Sᵀ + shift·I
inline Matrix random_spd(std::size_t n, GaussianStream& g, double shift = 0.5) {
  const Matrix s = random_matrix(n, n, g);
  return times_transpose(s, s) + shift * Matrix::identity(n);
}

inline double max_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

// Riccati oracle: value iteration on the DARE with Eigen, written
// independently of the library's doubling solver.
inline Eigen::MatrixXd riccati_iterate(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                                       int iterations = 100000) {
  Eigen::MatrixXd p = q;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd g = r + b.transpose() * p * b;
    const Eigen::MatrixXd next =
        q + a.transpose() * p * a - a.transpose() * p * b * g.ldlt().solve(b.transpose() * p * a);
    const double change = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (change <= 1e-14 * std::max(1.0, p.norm())) break;
  }
  return p;
}

inline Eigen::MatrixXd riccati_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::MatrixXd& p,
                                    const Eigen::MatrixXd& r) {
  return -(r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
}

}  // namespace ddlqr::test
