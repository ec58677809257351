#include "ddlqr/koopman.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include "ddlqr/error.hpp"
#include "ddlqr/random.hpp"
#include "ddlqr/sysid.hpp"

namespace ddlqr {

namespace {

std::string var_name(std::size_t i) { return "x" + std::to_string(i + 1); }

// All exponent vectors of length n with total degree d, x₁ powers descending.
void compositions(std::size_t n, unsigned d, std::vector<unsigned>& cur, std::size_t pos,
                  std::vector<std::vector<unsigned>>& out) {
  if (pos + 1 == n) {
    cur[pos] = d;
    out.push_back(cur);
    return;
  }
  for (unsigned e = d + 1; e-- > 0;) {
    cur[pos] = e;
    compositions(n, d - e, cur, pos + 1, out);
  }
}

std::vector<Observable> coordinates(std::size_t n) {
  std::vector<Observable> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Observable::coordinate_of(i));
  return out;
}

void check_column(const Matrix& x, std::size_t n, const char* what) {
  if (x.rows() != n || x.cols() != 1) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " must be a " + std::to_string(n) + " x 1 column");
  }
}

}  // namespace

Observable Observable::coordinate_of(std::size_t i) {
  return {var_name(i), [i](std::span<const double> x) { return x[i]; }, i};
}

Observable Observable::monomial(std::vector<unsigned> exponents) {
  std::string name;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] == 0) continue;
    if (!name.empty()) name += "*";
    name += var_name(i);
    if (exponents[i] > 1) name += "^" + std::to_string(exponents[i]);
  }
  if (name.empty()) name = "1";
  std::optional<std::size_t> coord;
  unsigned total = 0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    total += exponents[i];
    if (exponents[i] == 1) coord = i;
  }
  if (total != 1) coord.reset();
  auto fn = [e = std::move(exponents)](std::span<const double> x) {
    double v = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      for (unsigned p = 0; p < e[i]; ++p) v *= x[i];
    return v;
  };
  return {std::move(name), std::move(fn), coord};
}

Observable Observable::rbf(std::vector<double> center, double width) {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw Error(ErrorCode::InvalidArgument, "RBF width must be positive");
  }
  std::string name = "rbf(";
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (i) name += ",";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", center[i]);
    name += buf;
  }
  name += ")";
  auto fn = [c = std::move(center), width](std::span<const double> x) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) d2 += (x[i] - c[i]) * (x[i] - c[i]);
    return std::exp(-d2 / (2.0 * width * width));
  };
  return {std::move(name), std::move(fn), std::nullopt};
}

LiftingDictionary::LiftingDictionary(std::size_t n, std::vector<Observable> observables)
    : n_(n), obs_(std::move(observables)) {
  if (n_ == 0) throw Error(ErrorCode::InvalidArgument, "state dimension must be positive");
  if (obs_.size() <= n_) {
    throw Error(ErrorCode::InvalidArgument, "a lifting dictionary needs n_z > n, got n_z = " +
                                                std::to_string(obs_.size()) + ", n = " + std::to_string(n_));
  }
  for (const auto& o : obs_) {
    if (!o.fn) throw Error(ErrorCode::InvalidArgument, "observable '" + o.name + "' has no function");
    if (o.coordinate && *o.coordinate >= n_) {
      throw Error(ErrorCode::DimensionMismatch, "observable '" + o.name + "' refers to a missing coordinate");
    }
  }
}

LiftingDictionary LiftingDictionary::monomials(std::size_t n, unsigned degree) {
  std::vector<Observable> obs = coordinates(n);
  std::vector<unsigned> cur(n, 0);
  for (unsigned d = 2; d <= degree; ++d) {
    std::vector<std::vector<unsigned>> exps;
    if (n > 0) compositions(n, d, cur, 0, exps);
    for (auto& e : exps) obs.push_back(Observable::monomial(std::move(e)));
  }
  return LiftingDictionary(n, std::move(obs));
}

LiftingDictionary LiftingDictionary::rbf(std::size_t n, const Matrix& centers, double width) {
  if (centers.cols() != n) throw Error(ErrorCode::DimensionMismatch, "RBF centers must have n columns");
  std::vector<Observable> obs = coordinates(n);
  for (std::size_t r = 0; r < centers.rows(); ++r) {
    const auto row = centers.row_span(r);
    obs.push_back(Observable::rbf(std::vector<double>(row.begin(), row.end()), width));
  }
  return LiftingDictionary(n, std::move(obs));
}

std::vector<std::string> LiftingDictionary::names() const {
  std::vector<std::string> out;
  for (const auto& o : obs_) out.push_back(o.name);
  return out;
}

Matrix LiftingDictionary::lift(const Matrix& x) const {
  check_column(x, n_, "state");
  Matrix z(obs_.size(), 1);
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const double v = obs_[i].fn(x.data());
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteObservable, "observable '" + obs_[i].name + "' is not finite");
    }
    z(i, 0) = v;
  }
  return z;
}

LiftedDataRecord lift(const DataRecord& raw, const LiftingDictionary& dict, const ToleranceConfig& tol) {
  raw.validate();
  if (raw.n() != dict.n()) {
    throw Error(ErrorCode::DimensionMismatch, "dictionary is for n = " + std::to_string(dict.n()) +
                                                  " but the data has n = " + std::to_string(raw.n()));
  }
  const std::size_t t = raw.horizon();
  LiftedDataRecord out{raw.u0, Matrix(dict.n_z(), t), Matrix(dict.n_z(), t)};
  for (std::size_t k = 0; k < t; ++k) {
    out.z0.set_block(0, k, dict.lift(raw.x0.col(k)));
    out.z1.set_block(0, k, dict.lift(raw.x1.col(k)));
  }
  out.gram_rank = numerical_rank(times_transpose(out.z0, out.z0), tol);
  return out;
}

NonlinearPlant quadratic_demo_plant() {
  return {"quadratic-demo", 2, 1, [](const Matrix& x, const Matrix& u) {
            return Matrix{{0.9 * x(0, 0)}, {0.8 * x(1, 0) + (0.81 - 0.8) * x(0, 0) * x(0, 0) + u(0, 0)}};
          }};
}

DataRecord collect_nonlinear(const NonlinearPlant& plant, const NoiseSpec& noise, double input_std,
                             std::size_t horizon) {
  if (!plant.f) throw Error(ErrorCode::InvalidArgument, "plant has no dynamics");
  if (horizon == 0) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (!(noise.sigma_x >= 0.0) || !(noise.sigma_w >= 0.0) || !(input_std >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "standard deviations must be nonnegative");
  }
  const std::size_t n = plant.n, m = plant.m;
  GaussianStream rng(noise.seed);
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = noise.sigma_x * rng.normal();
  DataRecord rec{Matrix(m, horizon), Matrix(n, horizon), Matrix(n, horizon), Matrix(n, horizon)};
  for (std::size_t k = 0; k < horizon; ++k) {
    Matrix u(m, 1);
    for (std::size_t j = 0; j < m; ++j) u(j, 0) = input_std * rng.normal();
    Matrix next = plant.f(x, u);
    check_column(next, n, "f(x, u)");
    for (std::size_t i = 0; i < n; ++i) {
      const double w = noise.sigma_w * rng.normal();
      (*rec.w0)(i, k) = w;
      next(i, 0) += w;
      if (!(std::abs(next(i, 0)) <= kDivergenceThreshold)) {
        throw Error(ErrorCode::TrajectoryDiverged, "state magnitude exceeded 1e12 at step " + std::to_string(k + 1));
      }
    }
    rec.u0.set_block(0, k, u);
    rec.x0.set_block(0, k, x);
    rec.x1.set_block(0, k, next);
    x = std::move(next);
  }
  return rec;
}

LqrWeights lifted_weights(const LiftingDictionary& dict, const LqrWeights& w, double epsilon) {
  if (w.q().rows() != dict.n()) throw Error(ErrorCode::DimensionMismatch, "Q must be n x n");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  const std::size_t nz = dict.n_z();
  Matrix qz(nz, nz);
  std::vector<std::optional<std::size_t>> coord(nz);
  for (std::size_t i = 0; i < nz; ++i) coord[i] = dict.observables()[i].coordinate;
  for (std::size_t i = 0; i < nz; ++i) {
    if (!coord[i]) {
      qz(i, i) = epsilon;
      continue;
    }
    for (std::size_t j = 0; j < nz; ++j)
      if (coord[j]) qz(i, j) = w.q()(*coord[i], *coord[j]);
  }
  return LqrWeights(std::move(qz), w.r());
}

GainResult synth_koopman(const LiftedDataRecord& lifted, const LqrWeights& lifted_w, double gamma,
                         const SynthesisOptions& opt) {
  GainResult out = synth_direct_ridge(covariances(lifted.as_record(), gamma, opt.tol), lifted_w, opt);
  out.diagnostics.method = "koopman";
  return out;
}

Matrix koopman_rollout(const NonlinearPlant& plant, const LiftingDictionary& dict, const Matrix& k,
                       const Matrix& x_initial, std::size_t steps) {
  if (dict.n() != plant.n) throw Error(ErrorCode::DimensionMismatch, "dictionary and plant disagree on n");
  if (k.rows() != plant.m || k.cols() != dict.n_z()) throw Error(ErrorCode::DimensionMismatch, "gain must be m x n_z");
  check_column(x_initial, plant.n, "x(0)");
  Matrix traj(plant.n, steps + 1);
  Matrix x = x_initial;
  traj.set_block(0, 0, x);
  for (std::size_t s = 0; s < steps; ++s) {
    x = plant.f(x, k * dict.lift(x));
    check_column(x, plant.n, "f(x, u)");
    for (std::size_t i = 0; i < plant.n; ++i) {
      if (!(std::abs(x(i, 0)) <= kDivergenceThreshold)) {
        throw Error(ErrorCode::TrajectoryDiverged, "closed loop diverged at step " + std::to_string(s + 1));
      }
    }
    traj.set_block(0, s + 1, x);
  }
  return traj;
}

double embedding_residual(const LiftedDataRecord& lifted, const ToleranceConfig& tol) {
  const IdentifiedModel model = least_squares(lifted.as_record(), tol);
  const double denom = lifted.z1.frobenius_norm();
  return denom > 0.0 ? model.residual / denom : model.residual;
}

}  // namespace ddlqr
