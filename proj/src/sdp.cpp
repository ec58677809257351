#include "ddlqr/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>

#include "ddlqr/error.hpp"
#include "ddlqr/linalg.hpp"

namespace ddlqr {

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "Optimal";
    case SdpStatus::Infeasible: return "Infeasible";
    case SdpStatus::Unbounded: return "Unbounded";
    case SdpStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

void SdpProblem::validate() const {
  if (objective.size() != num_vars) {
    throw Error(ErrorCode::DimensionMismatch, "objective length must equal num_vars");
  }
  if (blocks.empty()) throw Error(ErrorCode::DimensionMismatch, "at least one PSD block is required");
  for (const auto& b : blocks) {
    if (b.dim == 0) throw Error(ErrorCode::DimensionMismatch, "PSD block dimension must be >= 1");
    if (b.constant.rows() != b.dim || b.constant.cols() != b.dim) {
      throw Error(ErrorCode::DimensionMismatch, "block constant must be dim x dim");
    }
    symmetrize(b.constant, ToleranceConfig{.symmetry = 1e-10});
    for (const auto& t : b.terms) {
      if (t.var >= num_vars) {
        throw Error(ErrorCode::UnknownVariable, "block term references variable " + std::to_string(t.var));
      }
      if (t.row >= b.dim || t.col >= b.dim) throw Error(ErrorCode::DimensionMismatch, "term outside block");
    }
  }
  for (const auto& e : equalities) {
    for (const auto& [var, coeff] : e.coeffs) {
      if (var >= num_vars) {
        throw Error(ErrorCode::UnknownVariable, "equality references variable " + std::to_string(var));
      }
    }
  }
}

Matrix evaluate_block(const LmiBlock& block, const std::vector<double>& x) {
  Matrix f = block.constant;
  for (const auto& t : block.terms) {
    const double v = t.value * x.at(t.var);
    f(t.row, t.col) += v;
    if (t.row != t.col) f(t.col, t.row) += v;
  }
  return f;
}

FeasibilityReport verify_feasibility(const SdpProblem& problem, const std::vector<double>& x) {
  problem.validate();
  if (x.size() != problem.num_vars) throw Error(ErrorCode::DimensionMismatch, "point has wrong length");
  FeasibilityReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& b : problem.blocks) {
    const Matrix f = evaluate_block(b, x);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(0.5 * (f + f.transpose())));
  }
  for (const auto& e : problem.equalities) {
    double lhs = 0.0;
    for (const auto& [var, coeff] : e.coeffs) lhs += coeff * x[var];
    rep.equality_residual =
        std::max(rep.equality_residual, std::abs(lhs - e.rhs) / std::max(1.0, std::abs(e.rhs)));
  }
  return rep;
}

namespace {

using Cone = std::vector<Matrix>;
using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double cone_dot(const Cone& a, const Cone& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += inner(a[j], b[j]);
  return s;
}

double cone_norm(const Cone& a) { return std::sqrt(cone_dot(a, a)); }

void axpy(double alpha, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void axpy(double alpha, const Cone& x, Cone& y) {
  for (std::size_t j = 0; j < x.size(); ++j) y[j] += alpha * x[j];
}

Vec scaled(const Vec& v, double a) {
  Vec out(v);
  for (double& e : out) e *= a;
  return out;
}

Cone scaled(const Cone& c, double a) {
  Cone out(c);
  for (auto& m : out) m *= a;
  return out;
}

Matrix sym_average(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Unchecked Cholesky for interior iterates; nullopt when not numerically PD.
std::optional<Matrix> interior_cholesky(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.5 * (a(i, j) + a(j, i));
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double sym_min_eig(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0);
  if (m.rows() == 2) {
    const double a = m(0, 0), d = m(1, 1), b = 0.5 * (m(0, 1) + m(1, 0));
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
  }
  return symmetric_eigen(sym_average(m), ToleranceConfig{.symmetry = 1.0}).values.front();
}

// Householder QR of a tall matrix (rows ≥ cols), Q kept in factored form.
class HouseholderQr {
 public:
  HouseholderQr() = default;
  explicit HouseholderQr(Matrix a) : r_(std::move(a)) {
    const std::size_t m = r_.rows(), k = r_.cols();
    for (std::size_t j = 0; j < k; ++j) {
      Vec v(m - j);
      double norm = 0.0;
      for (std::size_t i = j; i < m; ++i) {
        v[i - j] = r_(i, j);
        norm += v[i - j] * v[i - j];
      }
      norm = std::sqrt(norm);
      double beta = 0.0;
      if (norm > 0.0) {
        const double alpha = v[0] > 0.0 ? -norm : norm;
        v[0] -= alpha;
        double vv = 0.0;
        for (double e : v) vv += e * e;
        beta = vv > 0.0 ? 2.0 / vv : 0.0;
        for (std::size_t c = j; c < k; ++c) {
          double d = 0.0;
          for (std::size_t i = j; i < m; ++i) d += v[i - j] * r_(i, c);
          d *= beta;
          for (std::size_t i = j; i < m; ++i) r_(i, c) -= d * v[i - j];
        }
      }
      vs_.push_back(std::move(v));
      betas_.push_back(beta);
    }
  }

  std::size_t rows() const noexcept { return r_.rows(); }
  std::size_t cols() const noexcept { return r_.cols(); }

  void apply_qt(Vec& x) const {
    for (std::size_t j = 0; j < vs_.size(); ++j) reflect(j, x);
  }
  void apply_q(Vec& x) const {
    for (std::size_t j = vs_.size(); j-- > 0;) reflect(j, x);
  }
  // R·u = c using the leading cols() entries of c.
  Vec solve_r(const Vec& c) const {
    const std::size_t k = cols();
    Vec u(c.begin(), c.begin() + static_cast<long>(k));
    for (std::size_t i = k; i-- > 0;) {
      for (std::size_t j = i + 1; j < k; ++j) u[i] -= r_(i, j) * u[j];
      u[i] /= r_(i, i);
    }
    return u;
  }
  // Rᵀ·u = c.
  Vec solve_rt(const Vec& c) const {
    const std::size_t k = cols();
    Vec u(c);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < i; ++j) u[i] -= r_(j, i) * u[j];
      u[i] /= r_(i, i);
    }
    return u;
  }
  // min |R_ii| / max |R_ii|; 0 for an empty factorization.
  double diagonal_ratio() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = 0; i < cols(); ++i) {
      lo = std::min(lo, std::abs(r_(i, i)));
      hi = std::max(hi, std::abs(r_(i, i)));
    }
    return hi > 0.0 ? lo / hi : 0.0;
  }
  double diagonal_max() const {
    double hi = 0.0;
    for (std::size_t i = 0; i < cols(); ++i) hi = std::max(hi, std::abs(r_(i, i)));
    return hi;
  }

 private:
  void reflect(std::size_t j, Vec& x) const {
    const Vec& v = vs_[j];
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) d += v[i] * x[j + i];
    d *= betas_[j];
    for (std::size_t i = 0; i < v.size(); ++i) x[j + i] -= d * v[i];
  }

  Matrix r_;
  std::vector<Vec> vs_;
  std::vector<double> betas_;
};

// Nesterov–Todd scaling of one block: W(z) = rᵀ z r = Λ = rtiᵀ s rti.
struct BlockScaling {
  Matrix r;
  Matrix rti;
  Matrix rrt;    // r·rᵀ, for WᵀW
  std::vector<double> lambda;
};

struct SparseEntry {
  std::size_t row;
  std::size_t col;
  double value;  // entry of G_k = −F_k
};

struct BlockData {
  std::size_t dim = 0;
  Matrix h;  // F0
  std::vector<LmiBlock::Term> terms;
  std::vector<std::size_t> vars;                   // variables touching this block
  std::vector<Matrix> dense;                       // G_k per entry of vars
  std::vector<std::vector<SparseEntry>> sparse;    // G_k entries per entry of vars
};

class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& p, const SdpOptions& opt) : opt_(opt), n_(p.num_vars) {
    c_ = p.objective;
    p_ = p.equalities.size();
    a_ = Matrix(p_, n_);
    b_.resize(p_);
    // Equalities are equilibrated to unit row norm; row_scale_ maps the
    // multipliers back.
    row_scale_.assign(p_, 1.0);
    for (std::size_t i = 0; i < p_; ++i) {
      for (const auto& [var, coeff] : p.equalities[i].coeffs) a_(i, var) += coeff;
      b_[i] = p.equalities[i].rhs;
      double norm = 0.0;
      for (std::size_t k = 0; k < n_; ++k) norm += a_(i, k) * a_(i, k);
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        row_scale_[i] = 1.0 / norm;
        for (std::size_t k = 0; k < n_; ++k) a_(i, k) /= norm;
        b_[i] /= norm;
      }
    }
    degree_ = 0;
    for (const auto& blk : p.blocks) {
      BlockData bd;
      bd.dim = blk.dim;
      bd.h = sym_average(blk.constant);
      bd.terms = blk.terms;
      std::vector<long> slot(n_, -1);
      for (const auto& t : blk.terms) {
        const std::size_t r = std::min(t.row, t.col), c = std::max(t.row, t.col);
        if (slot[t.var] < 0) {
          slot[t.var] = static_cast<long>(bd.vars.size());
          bd.vars.push_back(t.var);
          bd.dense.emplace_back(blk.dim, blk.dim);
          bd.sparse.emplace_back();
        }
        const auto k = static_cast<std::size_t>(slot[t.var]);
        bd.dense[k](r, c) -= t.value;
        if (r != c) bd.dense[k](c, r) -= t.value;
        bd.sparse[k].push_back({r, c, -t.value});
      }
      degree_ += blk.dim;
      blocks_.push_back(std::move(bd));
    }
    resx0_ = std::max(1.0, norm2(c_));
    resy0_ = std::max(1.0, norm2(b_));
    Cone hc;
    for (const auto& bd : blocks_) hc.push_back(bd.h);
    h_ = std::move(hc);
    resz0_ = std::max(1.0, cone_norm(h_));
    for (const auto& bd : blocks_) svec_dim_ += bd.dim * (bd.dim + 1) / 2;
    setup_equalities();
  }

  SdpSolution run();

 private:
  Cone apply_g(const Vec& x) const {
    Cone out;
    out.reserve(blocks_.size());
    for (const auto& bd : blocks_) {
      Matrix m(bd.dim, bd.dim);
      for (const auto& t : bd.terms) {
        const double v = -t.value * x[t.var];
        m(t.row, t.col) += v;
        if (t.row != t.col) m(t.col, t.row) += v;
      }
      out.push_back(std::move(m));
    }
    return out;
  }

  Vec apply_gt(const Cone& z) const {
    Vec out(n_, 0.0);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      const Matrix& zj = z[j];
      for (const auto& t : blocks_[j].terms) {
        const double zz = t.row == t.col ? zj(t.row, t.row) : zj(t.row, t.col) + zj(t.col, t.row);
        out[t.var] -= t.value * zz;
      }
    }
    return out;
  }

  Vec apply_a(const Vec& x) const {
    Vec out(p_, 0.0);
    for (std::size_t i = 0; i < p_; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n_; ++k) s += a_(i, k) * x[k];
      out[i] = s;
    }
    return out;
  }

  Vec apply_at(const Vec& y) const {
    Vec out(n_, 0.0);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t k = 0; k < n_; ++k) out[k] += a_(i, k) * y[i];
    return out;
  }

  Cone identity_cone() const {
    Cone e;
    for (const auto& bd : blocks_) e.push_back(Matrix::identity(bd.dim));
    return e;
  }

  bool compute_scaling(const Cone& s, const Cone& z);
  void set_identity_scaling();
  bool factor_kkt();
  struct KktSolution {
    Vec x;
    Vec y;
    Cone z;   // unscaled
    Cone zt;  // W z
  };
  // bzt is the scaled right-hand side W⁻ᵀ·bz.
  KktSolution solve_kkt(const Vec& bx, const Vec& by, const Cone& bzt) const;
  void solve_kkt_once(const Vec& bx, const Vec& by, const Vec& bzt, Vec& x, Vec& y, Vec& zt) const;
  Vec apply_m(const Vec& x) const;
  Vec unscale_duals(const Vec& y, double factor) const {
    Vec out(y);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor * row_scale_[i];
    return out;
  }
  Vec apply_mt(const Vec& zt) const;
  Cone winv(const Cone& u) const;           // W⁻¹(u) = rti u rtiᵀ
  Vec svec(const Cone& u) const;
  Cone smat(const Vec& v) const;
  void setup_equalities();
  Cone scale_winv_t(const Cone& u) const;   // W⁻ᵀ(u) = rtiᵀ u rti
  double max_step(const Cone& scaled_dir) const;

  const SdpOptions opt_;
  const bool trace_ = std::getenv("DDLQR_SDP_TRACE") != nullptr;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::size_t degree_ = 0;
  Vec c_;
  Matrix a_;
  Vec b_;
  Vec row_scale_;
  Cone h_;
  std::vector<BlockData> blocks_;
  double resx0_ = 1.0, resy0_ = 1.0, resz0_ = 1.0;

  std::vector<BlockScaling> scaling_;
  std::size_t svec_dim_ = 0;
  // Equalities: independent rows of A, Aᵢᵀ = Q·[R; 0] with Q = [Q1 Q2].
  std::vector<std::size_t> eq_rows_;
  std::optional<HouseholderQr> eq_qr_;
  Matrix q1_, q2_;
  // Scaled constraint operator W⁻ᵀG in svec coordinates and the QR of its
  // restriction to the nullspace of A.
  Matrix mg_;
  std::optional<HouseholderQr> kkt_qr_;
  double kkt_reg_ = 0.0;
};

void InteriorPoint::set_identity_scaling() {
  scaling_.clear();
  for (const auto& bd : blocks_) {
    const Matrix eye = Matrix::identity(bd.dim);
    scaling_.push_back({eye, eye, eye, std::vector<double>(bd.dim, 1.0)});
  }
}

bool InteriorPoint::compute_scaling(const Cone& s, const Cone& z) {
  scaling_.clear();
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto ls = interior_cholesky(s[j]);
    const auto lz = interior_cholesky(z[j]);
    if (!ls || !lz) return false;
    const Svd dec = svd(transpose_times(*lz, *ls));
    BlockScaling sc;
    sc.lambda = dec.values;
    const std::size_t d = blocks_[j].dim;
    Matrix vs = dec.v, us = dec.u;
    for (std::size_t k = 0; k < d; ++k) {
      if (!(sc.lambda[k] > 0.0)) return false;
      const double f = 1.0 / std::sqrt(sc.lambda[k]);
      for (std::size_t i = 0; i < d; ++i) {
        vs(i, k) *= f;
        us(i, k) *= f;
      }
    }
    sc.r = *ls * vs;
    sc.rti = *lz * us;
    sc.rrt = times_transpose(sc.r, sc.r);
    scaling_.push_back(std::move(sc));
  }
  return true;
}

Cone InteriorPoint::winv(const Cone& u) const {
  Cone out;
  for (std::size_t j = 0; j < u.size(); ++j) out.push_back(times_transpose(scaling_[j].rti * u[j], scaling_[j].rti));
  return out;
}

Vec InteriorPoint::svec(const Cone& u) const {
  Vec out;
  out.reserve(svec_dim_);
  for (const auto& m : u)
    for (std::size_t c = 0; c < m.cols(); ++c)
      for (std::size_t r = 0; r <= c; ++r)
        out.push_back(r == c ? m(r, r) : std::numbers::sqrt2 * 0.5 * (m(r, c) + m(c, r)));
  return out;
}

Cone InteriorPoint::smat(const Vec& v) const {
  Cone out;
  std::size_t k = 0;
  for (const auto& bd : blocks_) {
    Matrix m(bd.dim, bd.dim);
    for (std::size_t c = 0; c < bd.dim; ++c)
      for (std::size_t r = 0; r <= c; ++r, ++k) {
        if (r == c) {
          m(r, r) = v[k];
        } else {
          m(r, c) = v[k] / std::numbers::sqrt2;
          m(c, r) = m(r, c);
        }
      }
    out.push_back(std::move(m));
  }
  return out;
}

void InteriorPoint::setup_equalities() {
  // Keep a maximal independent subset of the rows of A (Gram–Schmidt, two
  // passes); dependent rows are still checked through the residuals.
  std::vector<Vec> basis;
  for (std::size_t i = 0; i < p_; ++i) {
    Vec row(n_);
    for (std::size_t k = 0; k < n_; ++k) row[k] = a_(i, k);
    const double norm0 = norm2(row);
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) axpy(-dot(q, row), q, row);
    const double norm = norm2(row);
    if (norm <= 1e-14 * norm0) continue;
    for (double& e : row) e /= norm;
    basis.push_back(std::move(row));
    eq_rows_.push_back(i);
  }
  const std::size_t pi = eq_rows_.size();
  q1_ = Matrix(n_, pi);
  q2_ = Matrix(n_, n_ - pi);
  if (pi == 0) {
    q2_ = Matrix::identity(n_);
    return;
  }
  Matrix at(n_, pi);
  for (std::size_t c = 0; c < pi; ++c)
    for (std::size_t k = 0; k < n_; ++k) at(k, c) = a_(eq_rows_[c], k);
  eq_qr_.emplace(std::move(at));
  for (std::size_t c = 0; c < n_; ++c) {
    Vec e(n_, 0.0);
    e[c] = 1.0;
    eq_qr_->apply_q(e);
    for (std::size_t k = 0; k < n_; ++k) {
      if (c < pi) {
        q1_(k, c) = e[k];
      } else {
        q2_(k, c - pi) = e[k];
      }
    }
  }
}

Cone InteriorPoint::scale_winv_t(const Cone& u) const {
  Cone out;
  for (std::size_t j = 0; j < u.size(); ++j)
    out.push_back(transpose_times(scaling_[j].rti, u[j] * scaling_[j].rti));
  return out;
}

bool InteriorPoint::factor_kkt() {
  // Column k of mg_ is svec(W⁻ᵀ(G_k)).
  mg_ = Matrix(svec_dim_, n_);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const BlockData& bd = blocks_[j];
    const Matrix& rti = scaling_[j].rti;
    for (std::size_t a = 0; a < bd.vars.size(); ++a) {
      const Matrix g = transpose_times(rti, bd.dense[a] * rti);
      std::size_t k = offset;
      for (std::size_t c = 0; c < bd.dim; ++c)
        for (std::size_t r = 0; r <= c; ++r, ++k)
          mg_(k, bd.vars[a]) = r == c ? g(r, r) : std::numbers::sqrt2 * 0.5 * (g(r, c) + g(c, r));
    }
    offset += bd.dim * (bd.dim + 1) / 2;
  }
  if (!mg_.all_finite()) return false;
  const Matrix b = mg_ * q2_;
  const std::size_t k = b.cols();
  kkt_reg_ = 0.0;
  if (k == 0) {
    kkt_qr_.reset();
    return true;
  }
  if (b.rows() >= k) {
    kkt_qr_.emplace(b);
    if (kkt_qr_->diagonal_ratio() > 1e-13) return true;
  }
  // Rank-deficient restriction: Tikhonov rows keep the factorization usable
  // and iterative refinement corrects the resulting bias.
  double scale = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double col = 0.0;
    for (std::size_t r = 0; r < b.rows(); ++r) col += b(r, c) * b(r, c);
    scale = std::max(scale, std::sqrt(col));
  }
  kkt_reg_ = 1e-8 * std::max(1.0, scale);
  Matrix aug(b.rows() + k, k);
  aug.set_block(0, 0, b);
  for (std::size_t c = 0; c < k; ++c) aug(b.rows() + c, c) = kkt_reg_;
  kkt_qr_.emplace(std::move(aug));
  return kkt_qr_->diagonal_ratio() > 1e-15;
}

Vec InteriorPoint::apply_m(const Vec& x) const {
  Vec out(svec_dim_, 0.0);
  for (std::size_t i = 0; i < svec_dim_; ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < n_; ++k) v += mg_(i, k) * x[k];
    out[i] = v;
  }
  return out;
}

Vec InteriorPoint::apply_mt(const Vec& zt) const {
  Vec out(n_, 0.0);
  for (std::size_t i = 0; i < svec_dim_; ++i) {
    const double v = zt[i];
    if (v == 0.0) continue;
    for (std::size_t k = 0; k < n_; ++k) out[k] += mg_(i, k) * v;
  }
  return out;
}

// Scaled KKT system in (x, y, z̃) with M = W⁻ᵀG:
//   Aᵀy + Mᵀz̃ = bx,  A x = by,  M x − z̃ = bzt.
// Write x = Q1 u + Q2 ξ; A x = by fixes u, and projecting the first
// equation on Q2 gives (MQ2)ᵀ(MQ2) ξ = Q2ᵀbx + (MQ2)ᵀ(bzt − M Q1 u),
// solved through the QR factors of MQ2.
void InteriorPoint::solve_kkt_once(const Vec& bx, const Vec& by, const Vec& bzt, Vec& x, Vec& y, Vec& zt) const {
  const std::size_t pi = eq_rows_.size();
  x.assign(n_, 0.0);
  if (pi > 0) {
    Vec byi(pi);
    for (std::size_t c = 0; c < pi; ++c) byi[c] = by[eq_rows_[c]];
    const Vec u = eq_qr_->solve_rt(byi);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t c = 0; c < pi; ++c) x[k] += q1_(k, c) * u[c];
  }
  const std::size_t nk = q2_.cols();
  if (nk > 0) {
    Vec r = bzt;
    axpy(-1.0, apply_m(x), r);
    Vec c(nk, 0.0);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t j = 0; j < nk; ++j) c[j] += q2_(k, j) * bx[k];
    r.resize(kkt_qr_->rows(), 0.0);
    kkt_qr_->apply_qt(r);
    Vec rhs = kkt_qr_->solve_rt(c);
    for (std::size_t j = 0; j < nk; ++j) rhs[j] += r[j];
    const Vec xi = kkt_qr_->solve_r(rhs);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t j = 0; j < nk; ++j) x[k] += q2_(k, j) * xi[j];
  }
  zt = apply_m(x);
  axpy(-1.0, bzt, zt);
  y.assign(p_, 0.0);
  if (pi > 0) {
    Vec res = bx;
    axpy(-1.0, apply_mt(zt), res);
    Vec w(pi, 0.0);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t c = 0; c < pi; ++c) w[c] += q1_(k, c) * res[k];
    const Vec yi = eq_qr_->solve_r(w);
    for (std::size_t c = 0; c < pi; ++c) y[eq_rows_[c]] = yi[c];
  }
}

// Solves the scaled system with two rounds of iterative refinement.
InteriorPoint::KktSolution InteriorPoint::solve_kkt(const Vec& bx, const Vec& by, const Cone& bzt) const {
  const Vec bz = svec(bzt);
  Vec x, y, zt;
  solve_kkt_once(bx, by, bz, x, y, zt);
  for (int round = 0; round < 2; ++round) {
    // The first block uses the unscaled z actually returned, so that errors
    // of the W⁻¹ map are corrected as well.
    Vec ex = bx;
    axpy(-1.0, apply_at(y), ex);
    axpy(-1.0, apply_gt(winv(smat(zt))), ex);
    Vec ey = by;
    axpy(-1.0, apply_a(x), ey);
    Vec ez = bz;
    axpy(-1.0, apply_m(x), ez);
    axpy(1.0, zt, ez);
    Vec cx, cy, cz;
    solve_kkt_once(ex, ey, ez, cx, cy, cz);
    axpy(1.0, cx, x);
    axpy(1.0, cy, y);
    axpy(1.0, cz, zt);
  }
  KktSolution out;
  out.x = std::move(x);
  out.y = std::move(y);
  out.zt = smat(zt);
  out.z = winv(out.zt);
  return out;
}

// Largest α with Λ + α·Δ ⪰ 0 in scaled coordinates; +inf when unbounded.
double InteriorPoint::max_step(const Cone& scaled_dir) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < scaled_dir.size(); ++j) {
    const auto& lam = scaling_[j].lambda;
    Matrix m = scaled_dir[j];
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) /= std::sqrt(lam[i] * lam[k]);
    const double mu = sym_min_eig(m);
    if (mu < 0.0) alpha = std::min(alpha, -1.0 / mu);
  }
  return alpha;
}

SdpSolution InteriorPoint::run() {
  // `best` keeps the iterate with the smallest worst-case residual; it is
  // what a NumericalFailure reports.
  SdpSolution best;
  double best_merit = std::numeric_limits<double>::infinity();
  int stalled = 0;
  SdpSolution& out = best;  // failure exits below report the best iterate
  const double inf = std::numeric_limits<double>::infinity();
  const double tol = opt_.tol;

  // Starting point from least-norm solutions with identity scaling, shifted
  // into the cone interior.
  set_identity_scaling();
  if (!factor_kkt()) return out;
  Cone zero_cone = scaled(h_, 0.0);
  const Vec zero_x(n_, 0.0), zero_y(p_, 0.0);
  KktSolution primal0 = solve_kkt(zero_x, b_, h_);
  KktSolution dual0 = solve_kkt(scaled(c_, -1.0), zero_y, zero_cone);
  Vec x = primal0.x;
  Cone s = scaled(primal0.z, -1.0);
  Vec y = dual0.y;
  Cone z = dual0.z;
  const auto shift_into_cone = [&](Cone& v) {
    double worst = -inf;
    for (const auto& m : v) worst = std::max(worst, -sym_min_eig(m));
    if (worst >= -1e-8 * std::max(1.0, cone_norm(v))) {
      for (std::size_t j = 0; j < v.size(); ++j) v[j] += (1.0 + worst) * Matrix::identity(v[j].rows());
    }
  };
  shift_into_cone(s);
  shift_into_cone(z);
  double tau = 1.0, kappa = 1.0;

  for (int it = 0;; ++it) {
    for (auto& m : s) m = sym_average(m);
    for (auto& m : z) m = sym_average(m);

    // Residuals of the homogeneous embedding.
    Vec hrx = apply_at(y);
    axpy(1.0, apply_gt(z), hrx);
    for (double& v : hrx) v = -v;
    Vec rx = hrx;
    axpy(-tau, c_, rx);
    const Vec hry = apply_a(x);
    Vec ry = hry;
    axpy(-tau, b_, ry);
    Cone hrz = apply_g(x);
    axpy(1.0, s, hrz);
    Cone rz = hrz;
    axpy(-tau, h_, rz);
    const double cx = dot(c_, x), by = dot(b_, y), hz = cone_dot(h_, z);
    const double rt = kappa + cx + by + hz;
    const double sz = cone_dot(s, z);
    const double mu = (sz + tau * kappa) / static_cast<double>(degree_ + 1);

    // Each residual is a sum of three terms. It is measured relative to the
    // second largest of them: large only when large terms cancel, in which
    // case rounding limits how small the sum can get.
    const auto second_largest = [](double a, double b, double c) {
      return std::max(std::min(a, b), std::min(std::max(a, b), c));
    };
    const double pz = std::max(resz0_, second_largest(cone_norm(apply_g(x)), cone_norm(s), tau * cone_norm(h_)) / tau);
    const double dx = std::max(resx0_, second_largest(norm2(apply_gt(z)), norm2(apply_at(y)), tau * norm2(c_)) / tau);
    const double pres = std::max(norm2(ry) / tau / resy0_, cone_norm(rz) / tau / pz);
    const double dres = norm2(rx) / tau / dx;
    const double pcost = cx / tau;
    const double gap = sz / (tau * tau);
    const double relgap = gap / std::max(1.0, std::abs(pcost));

    SdpSolution cur;
    cur.iterations = it;
    cur.primal_residual = pres;
    cur.dual_residual = dres;
    cur.gap = relgap;
    cur.x = scaled(x, 1.0 / tau);
    cur.eq_duals = unscale_duals(y, 1.0 / tau);
    cur.slacks = scaled(s, 1.0 / tau);
    cur.duals = scaled(z, 1.0 / tau);
    cur.objective = pcost;
    if (trace_) {
      std::fprintf(stderr, "sdp %3d pcost %+.6e pres %.2e (eq %.2e) dres %.2e gap %.2e tau %.2e kappa %.2e\n", it,
                   pcost, pres, norm2(ry) / tau / resy0_, dres, relgap, tau, kappa);
    }

    if (pres <= tol && dres <= tol && relgap <= tol) {
      cur.status = SdpStatus::Optimal;
      return cur;
    }
    if (by + hz < 0.0) {
      const double pinf = norm2(hrx) / resx0_ / -(by + hz);
      if (pinf <= tol) {
        cur.status = SdpStatus::Infeasible;
        cur.certificate_residual = pinf;
        cur.eq_duals = unscale_duals(y, 1.0 / -(by + hz));
        cur.duals = scaled(z, 1.0 / -(by + hz));
        return cur;
      }
    }
    if (cx < 0.0) {
      const double dinf = std::max(norm2(hry) / resy0_, cone_norm(hrz) / resz0_) / -cx;
      if (dinf <= tol) {
        cur.status = SdpStatus::Unbounded;
        cur.certificate_residual = dinf;
        cur.x = scaled(x, 1.0 / -cx);
        return cur;
      }
    }
    const double merit = std::max({pres, dres, relgap});
    if (merit < best_merit) {
      best_merit = merit;
      best = cur;
      stalled = 0;
    } else if (++stalled >= 8) {
      return best;
    }
    if (it >= opt_.max_iter) return out;

    if (!compute_scaling(s, z) || !factor_kkt()) return out;

    // Column of the embedding multiplying Δτ.
    const KktSolution sol1 = solve_kkt(scaled(c_, -1.0), b_, scale_winv_t(h_));
    const double denom_base = dot(c_, sol1.x) + dot(b_, sol1.y) + cone_dot(h_, sol1.z);
    const Cone rzt = scale_winv_t(rz);

    struct Direction {
      KktSolution d;
      Cone dst;  // W⁻ᵀΔs
      Cone ds;   // Δs
      double dtau;
      double dkappa;
    };
    const auto direction = [&](double sigma, const Cone& ds, double dtk) {
      // ds is the scaled complementarity target; λ◇ds solves (ΛX + XΛ)/2 = ds.
      Cone lam_div;
      for (std::size_t j = 0; j < ds.size(); ++j) {
        const auto& lam = scaling_[j].lambda;
        Matrix m = ds[j];
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t k = 0; k < m.cols(); ++k) m(i, k) *= 2.0 / (lam[i] + lam[k]);
        lam_div.push_back(std::move(m));
      }
      const double eta = 1.0 - sigma;
      Cone bzt = scaled(rzt, -eta);
      axpy(-1.0, lam_div, bzt);
      const KktSolution sol2 = solve_kkt(scaled(rx, eta), scaled(ry, -eta), bzt);
      const double dtau = (-eta * rt - dtk / tau -
                           (dot(c_, sol2.x) + dot(b_, sol2.y) + cone_dot(h_, sol2.z))) /
                          (-kappa / tau + denom_base);
      Direction out{sol2, {}, {}, dtau, 0.0};
      axpy(dtau, sol1.x, out.d.x);
      axpy(dtau, sol1.y, out.d.y);
      axpy(dtau, sol1.z, out.d.z);
      axpy(dtau, sol1.zt, out.d.zt);
      // W⁻ᵀΔs = λ◇ds − WΔz
      out.dst = lam_div;
      axpy(-1.0, out.d.zt, out.dst);
      // Δs itself is taken from the linearized primal residual,
      // GΔx + Δs − hΔτ = −η r_z, which keeps that residual exact.
      out.ds = scaled(rz, -eta);
      axpy(dtau, h_, out.ds);
      axpy(-1.0, apply_g(out.d.x), out.ds);
      out.dkappa = (dtk - kappa * dtau) / tau;
      return out;
    };

    const auto step_length = [&](const Direction& dir) {
      double alpha = std::min(max_step(dir.dst), max_step(dir.d.zt));
      if (dir.dtau < 0.0) alpha = std::min(alpha, -tau / dir.dtau);
      if (dir.dkappa < 0.0) alpha = std::min(alpha, -kappa / dir.dkappa);
      return alpha;
    };

    // Predictor.
    Cone ds_aff;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      Matrix m(blocks_[j].dim, blocks_[j].dim);
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) = -scaling_[j].lambda[i] * scaling_[j].lambda[i];
      ds_aff.push_back(std::move(m));
    }
    const Direction aff = direction(0.0, ds_aff, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    // Corrector with Mehrotra's second-order term.
    Cone ds_comb = ds_aff;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      const Matrix prod = aff.dst[j] * aff.d.zt[j];
      ds_comb[j] -= 0.5 * (prod + prod.transpose());
      for (std::size_t i = 0; i < blocks_[j].dim; ++i) ds_comb[j](i, i) += sigma * mu;
    }
    const Direction dir = direction(sigma, ds_comb, -tau * kappa + sigma * mu - aff.dtau * aff.dkappa);
    const auto& d = dir.d;
    const auto& dsv = dir.ds;
    const double dtau = dir.dtau, dkappa = dir.dkappa;
    double alpha = std::min(1.0, 0.99 * step_length(dir));
    // The step length is computed in scaled coordinates; make sure both
    // updated cone variables remain numerically interior.
    const auto interior = [&](const Cone& base, const Cone& step, double a) {
      for (std::size_t j = 0; j < base.size(); ++j) {
        if (!interior_cholesky(base[j] + a * step[j])) return false;
      }
      return true;
    };
    for (int tries = 0; tries < 30 && alpha > 1e-12 && !(interior(s, dsv, alpha) && interior(z, d.z, alpha));
         ++tries) {
      alpha *= 0.7;
    }
    if (!(alpha > 1e-12)) return out;
    if (trace_) std::fprintf(stderr, "    alpha_aff %.3e sigma %.3e alpha %.3e\n", alpha_aff, sigma, alpha);

    axpy(alpha, d.x, x);
    axpy(alpha, d.y, y);
    axpy(alpha, d.z, z);
    axpy(alpha, dsv, s);
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !std::isfinite(tau)) return out;
  }
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, const SdpOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0) || options.max_iter < 1) {
    throw Error(ErrorCode::InvalidArgument, "solver tolerance and iteration budget must be positive");
  }
  // Variables are rescaled so every column of the constraint data has unit
  // norm; x is mapped back afterwards.
  std::vector<double> col(problem.num_vars, 0.0);
  for (const auto& blk : problem.blocks)
    for (const auto& t : blk.terms) col[t.var] += (t.row == t.col ? 1.0 : 2.0) * t.value * t.value;
  for (const auto& eq : problem.equalities)
    for (const auto& [var, coeff] : eq.coeffs) col[var] += coeff * coeff;
  for (auto& v : col) v = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
  SdpProblem scaled_problem = problem;
  for (std::size_t k = 0; k < col.size(); ++k) scaled_problem.objective[k] *= col[k];
  for (auto& blk : scaled_problem.blocks)
    for (auto& t : blk.terms) t.value *= col[t.var];
  for (auto& eq : scaled_problem.equalities)
    for (auto& [var, coeff] : eq.coeffs) coeff *= col[var];

  InteriorPoint ipm(scaled_problem, options);
  SdpSolution sol = ipm.run();
  if (sol.x.size() == col.size())
    for (std::size_t k = 0; k < col.size(); ++k) sol.x[k] *= col[k];
  return sol;
}

}  // namespace ddlqr
