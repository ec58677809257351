#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddlqr/gain.hpp"
#include "ddlqr/lqr.hpp"
#include "ddlqr/lti.hpp"
#include "ddlqr/synthesis.hpp"

namespace ddlqr {

using ObservableFn = std::function<double(std::span<const double>)>;

struct Observable {
  std::string name;
  ObservableFn fn;
  /// Set when the observable returns state coordinate i unchanged.
  std::optional<std::size_t> coordinate;

  static Observable coordinate_of(std::size_t i);
  /// ∏ x_i^{exponents[i]}
  static Observable monomial(std::vector<unsigned> exponents);
  /// exp(−‖x − center‖² / (2·width²))
  static Observable rbf(std::vector<double> center, double width);
};

/// Θ(x) = [φ₁(x), …, φ_{n_z}(x)] with n_z > n.
class LiftingDictionary {
 public:
  LiftingDictionary(std::size_t n, std::vector<Observable> observables);

  /// x₁..x_n followed by every monomial of total degree 2..degree, graded
  /// lexicographically.
  static LiftingDictionary monomials(std::size_t n, unsigned degree);
  /// x₁..x_n followed by one Gaussian bump per row of `centers`.
  static LiftingDictionary rbf(std::size_t n, const Matrix& centers, double width);

  std::size_t n() const noexcept { return n_; }
  std::size_t n_z() const noexcept { return obs_.size(); }
  const std::vector<Observable>& observables() const noexcept { return obs_; }
  std::vector<std::string> names() const;

  /// Θ(x) as an n_z × 1 column. Throws NonFiniteObservable.
  Matrix lift(const Matrix& x) const;

 private:
  std::size_t n_;
  std::vector<Observable> obs_;
};

struct LiftedDataRecord {
  Matrix u0;  // m × T
  Matrix z0;  // n_z × T
  Matrix z1;  // n_z × T
  /// Numerical rank of the lifted Gram matrix Z0·Z0ᵀ; below n_z means the
  /// observables are dependent on the sampled data.
  std::size_t gram_rank = 0;

  bool observables_independent() const noexcept { return gram_rank == z0.rows(); }
  DataRecord as_record() const { return DataRecord{u0, z0, z1, std::nullopt}; }
};

/// Columnwise Θ(X0), Θ(X1).
LiftedDataRecord lift(const DataRecord& raw, const LiftingDictionary& dict, const ToleranceConfig& tol = {});

/// x(k+1) = f(x(k), u(k)); both arguments and the result are columns.
using NonlinearDynamics = std::function<Matrix(const Matrix& x, const Matrix& u)>;

struct NonlinearPlant {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  NonlinearDynamics f;
};

/// x₁⁺ = 0.9x₁, x₂⁺ = 0.8x₂ + 0.01x₁² + u. Embeds exactly under [x₁, x₂, x₁²].
NonlinearPlant quadratic_demo_plant();

/// Random-input excitation of a nonlinear plant, with the same draw order as
/// simulate_and_collect. Additive state noise (sigma_w) goes beyond the
/// noiseless lifted model and is meant for robustness probing.
DataRecord collect_nonlinear(const NonlinearPlant& plant, const NoiseSpec& noise, double input_std,
                             std::size_t horizon);

/// Q_z = blkdiag(Q on coordinate observables, ε·I on the rest), R unchanged.
LqrWeights lifted_weights(const LiftingDictionary& dict, const LqrWeights& w, double epsilon = 1e-6);

/// Ridge direct LQR on the lifted data; K is m × n_z and acts as u = K·Θ(x).
GainResult synth_koopman(const LiftedDataRecord& lifted, const LqrWeights& lifted_w, double gamma,
                         const SynthesisOptions& opt = {});

/// Closed-loop rollout of u = K·Θ(x) on the nonlinear plant. Columns are
/// x(0), …, x(steps). Throws TrajectoryDiverged past kDivergenceThreshold.
Matrix koopman_rollout(const NonlinearPlant& plant, const LiftingDictionary& dict, const Matrix& k,
                       const Matrix& x_initial, std::size_t steps);

/// ‖Z1 − [B A]·D0‖_F / ‖Z1‖_F for the least-squares lifted model.
double embedding_residual(const LiftedDataRecord& lifted, const ToleranceConfig& tol = {});

}  // namespace ddlqr
