#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "ddlqr/matrix.hpp"

namespace ddlqr {

/// Numerical thresholds shared by the dense kernels. All are relative to the
/// norm of the matrix being processed.
struct ToleranceConfig {
  double symmetry = 1e-12;         // max |M - Mᵀ| / max|M| accepted as symmetric
  double singular_pivot = 1e-14;   // LU pivot threshold relative to ‖A‖
  double condition_zero = 1e-14;   // smallest eigenvalue treated as zero
  double rank = 1e-10;             // singular values below rank·σ_max count as zero
  double stability_margin = 1e-9;  // ρ(M) < 1 - margin counts as stable
  int max_eig_iterations = 60;     // per eigenvalue in the QR iteration
};

/// Returns (M + Mᵀ)/2 when M is symmetric within tol.symmetry (relative), else
/// throws NotSymmetric.
Matrix symmetrize(const Matrix& m, const ToleranceConfig& tol = {});

/// Lower-triangular L with L·Lᵀ = M. Throws NotPositiveDefinite on a
/// non-positive pivot.
Matrix cholesky(const Matrix& m, const ToleranceConfig& tol = {});

/// True when cholesky(m) succeeds.
bool is_positive_definite(const Matrix& m, const ToleranceConfig& tol = {});

/// Solves L·Lᵀ·X = B given the Cholesky factor L.
Matrix cholesky_solve(const Matrix& l, const Matrix& b);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& a, const ToleranceConfig& tol = {});

  Matrix solve(const Matrix& b) const;
  void solve_in_place(std::span<double> rhs) const;
  std::size_t dim() const noexcept { return lu_.rows(); }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

/// X with A·X = B. Throws Singular when a pivot drops below
/// tol.singular_pivot·‖A‖.
Matrix solve_linear(const Matrix& a, const Matrix& b, const ToleranceConfig& tol = {});

Matrix inverse(const Matrix& a, const ToleranceConfig& tol = {});

/// Eigenvalues of a general square matrix: Hessenberg reduction followed by
/// Francis double-shift QR.
std::vector<std::complex<double>> eigenvalues(const Matrix& m, const ToleranceConfig& tol = {});

double spectral_radius(const Matrix& m, const ToleranceConfig& tol = {});

/// ρ(M) < 1 - tol.stability_margin.
bool is_schur_stable(const Matrix& m, const ToleranceConfig& tol = {});

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& m, const ToleranceConfig& tol = {});

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& m, const ToleranceConfig& tol = {});

struct Svd {
  Matrix u;                     // rows × k
  std::vector<double> values;   // descending, k = min(rows, cols)
  Matrix v;                     // cols × k
};

/// Thin SVD by one-sided Jacobi rotations.
Svd svd(const Matrix& m);

std::vector<double> singular_values(const Matrix& m);

/// Number of singular values above tol.rank·σ_max.
std::size_t numerical_rank(const Matrix& m, const ToleranceConfig& tol = {});

/// λ_max/λ_min of a symmetric PSD matrix; +infinity when
/// λ_min ≤ tol.condition_zero·λ_max.
double condition_number(const Matrix& m, const ToleranceConfig& tol = {});

/// Symmetric PSD square root; negative eigenvalues (roundoff) clamp to zero.
Matrix sqrt_psd(const Matrix& m, const ToleranceConfig& tol = {});

Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization.
Matrix vec(const Matrix& m);

/// Inverse of vec for a rows×cols matrix.
Matrix unvec(const Matrix& v, std::size_t rows, std::size_t cols);

}  // namespace ddlqr
