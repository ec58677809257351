#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "ddlqr/linalg.hpp"
#include "ddlqr/matrix.hpp"

namespace ddlqr {

/// x(k+1) = A x(k) + B u(k) + w(k).
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b);

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  std::size_t n() const noexcept { return a_.rows(); }
  std::size_t m() const noexcept { return b_.cols(); }

  /// A + B·K
  Matrix closed_loop(const Matrix& k) const;

 private:
  Matrix a_;
  Matrix b_;
};

/// The 4-state, 1-input benchmark plant (unstable open loop).
LtiSystem benchmark_plant();

struct NoiseSpec {
  double sigma_x = 1.0;  // std dev of x(0)
  double sigma_w = 0.0;  // std dev of each process-noise entry
  std::uint64_t seed = 0;
};

/// One experiment: inputs, states and successor states over T steps.
struct DataRecord {
  Matrix u0;                 // m × T
  Matrix x0;                 // n × T
  Matrix x1;                 // n × T
  std::optional<Matrix> w0;  // n × T, simulation only

  std::size_t n() const noexcept { return x0.rows(); }
  std::size_t m() const noexcept { return u0.rows(); }
  std::size_t horizon() const noexcept { return x0.cols(); }
  /// [U0; X0]
  Matrix d0() const { return vstack(u0, x0); }

  /// Throws DimensionMismatch unless all blocks share T ≥ 1 columns.
  void validate() const;
};

/// Sample covariances of a DataRecord, optionally ridge-shifted by γ.
struct CovarianceData {
  Matrix phi;     // D0·D0ᵀ/T
  Matrix psi;     // (D0·D0ᵀ + γI)/T
  Matrix psi1;    // first m rows of psi
  Matrix psi2;    // last n rows of psi
  Matrix xbar0;   // X0·D0ᵀ/T
  Matrix ubar0;   // U0·D0ᵀ/T
  Matrix xbar1;   // X1·D0ᵀ/T
  std::optional<Matrix> wbar0;
  double gamma = 0.0;
  std::size_t horizon = 0;
  std::size_t rank_d0 = 0;
  double cond_gram = 0.0;  // cond(D0·D0ᵀ)

  std::size_t n() const noexcept { return xbar0.rows(); }
  std::size_t m() const noexcept { return ubar0.rows(); }
};

/// States whose magnitude exceeds this are reported as a diverged trajectory.
inline constexpr double kDivergenceThreshold = 1e12;

/// Excites the plant with u(k) ~ N(0, input_std²I), x(0) ~ N(0, σx²I),
/// w(k) ~ N(0, σw²I). Draw order from the seeded stream: the n entries of
/// x(0), then for each step the m entries of u(k) followed by the n entries
/// of w(k).
DataRecord simulate_and_collect(const LtiSystem& sys, const NoiseSpec& noise, double input_std,
                                std::size_t horizon);

/// Scripted variant: the caller provides x(0) and U0; noise is still drawn
/// from the seeded stream (n entries per step).
DataRecord simulate_with_inputs(const LtiSystem& sys, const Matrix& x_initial, const Matrix& u0,
                                const NoiseSpec& noise);

CovarianceData covariances(const DataRecord& rec, double gamma, const ToleranceConfig& tol = {});

}  // namespace ddlqr
