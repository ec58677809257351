#include "ddlqr/lmi.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <tuple>

#include "ddlqr/error.hpp"
#include "ddlqr/linalg.hpp"

namespace ddlqr {

namespace {

std::atomic<std::uint64_t> next_builder_id{1};

void require_same_shape(const AffineExpr& a, const AffineExpr& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "affine expressions differ in shape");
  }
}

}  // namespace

AffineExpr::AffineExpr(Matrix constant) : constant_(std::move(constant)) {}

void AffineExpr::adopt_owner(std::uint64_t other) {
  if (other == 0) return;
  if (owner_ != 0 && owner_ != other) {
    throw Error(ErrorCode::UnknownVariable, "expression mixes variables of different builders");
  }
  owner_ = other;
}

void AffineExpr::compress() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
    return std::tie(a.var, a.row, a.col) < std::tie(b.var, b.row, b.col);
  });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!merged.empty() && merged.back().var == t.var && merged.back().row == t.row &&
        merged.back().col == t.col) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
  terms_ = std::move(merged);
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr out(constant_.transpose());
  out.owner_ = owner_;
  out.terms_.reserve(terms_.size());
  for (const auto& t : terms_) out.terms_.push_back({t.var, t.col, t.row, t.coeff});
  return out;
}

Matrix AffineExpr::evaluate(const std::vector<double>& x) const {
  Matrix out = constant_;
  for (const auto& t : terms_) {
    if (t.var >= x.size()) throw Error(ErrorCode::UnknownVariable, "point too short for expression");
    out(t.row, t.col) += t.coeff * x[t.var];
  }
  return out;
}

AffineExpr AffineExpr::block_matrix(const std::vector<std::vector<AffineExpr>>& blocks) {
  if (blocks.empty() || blocks.front().empty()) {
    throw Error(ErrorCode::DimensionMismatch, "empty block matrix");
  }
  const std::size_t nc = blocks.front().size();
  std::vector<std::size_t> heights, widths;
  for (const auto& row : blocks) {
    if (row.size() != nc) throw Error(ErrorCode::DimensionMismatch, "ragged block matrix");
    heights.push_back(row.front().rows());
  }
  for (const auto& e : blocks.front()) widths.push_back(e.cols());
  std::size_t total_rows = 0, total_cols = 0;
  for (auto h : heights) total_rows += h;
  for (auto w : widths) total_cols += w;

  AffineExpr out(Matrix(total_rows, total_cols));
  std::size_t r0 = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::size_t c0 = 0;
    for (std::size_t j = 0; j < nc; ++j) {
      const AffineExpr& e = blocks[i][j];
      if (e.rows() != heights[i] || e.cols() != widths[j]) {
        throw Error(ErrorCode::DimensionMismatch, "block (" + std::to_string(i) + "," +
                                                      std::to_string(j) + ") has inconsistent shape");
      }
      out.adopt_owner(e.owner_);
      out.constant_.set_block(r0, c0, e.constant_);
      for (const auto& t : e.terms_) out.terms_.push_back({t.var, t.row + r0, t.col + c0, t.coeff});
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  return out;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  require_same_shape(*this, o);
  adopt_owner(o.owner_);
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  compress();
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  require_same_shape(*this, o);
  adopt_owner(o.owner_);
  constant_ -= o.constant_;
  for (const auto& t : o.terms_) terms_.push_back({t.var, t.row, t.col, -t.coeff});
  compress();
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  constant_ *= s;
  for (auto& t : terms_) t.coeff *= s;
  if (s == 0.0) terms_.clear();
  return *this;
}

AffineExpr operator*(const Matrix& c, const AffineExpr& e) {
  if (c.cols() != e.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix * expression");
  AffineExpr out(c * e.constant_);
  out.owner_ = e.owner_;
  for (const auto& t : e.terms_) {
    for (std::size_t i = 0; i < c.rows(); ++i) {
      const double f = c(i, t.row);
      if (f != 0.0) out.terms_.push_back({t.var, i, t.col, f * t.coeff});
    }
  }
  out.compress();
  return out;
}

AffineExpr operator*(const AffineExpr& e, const Matrix& c) {
  if (e.cols() != c.rows()) throw Error(ErrorCode::DimensionMismatch, "expression * matrix");
  AffineExpr out(e.constant_ * c);
  out.owner_ = e.owner_;
  for (const auto& t : e.terms_) {
    for (std::size_t j = 0; j < c.cols(); ++j) {
      const double f = c(t.col, j);
      if (f != 0.0) out.terms_.push_back({t.var, t.row, j, t.coeff * f});
    }
  }
  out.compress();
  return out;
}

AffineExpr operator+(AffineExpr a, const Matrix& b) { return a += AffineExpr(b); }
AffineExpr operator-(AffineExpr a, const Matrix& b) { return a -= AffineExpr(b); }

AffineExpr trace(const AffineExpr& e) {
  if (e.rows() != e.cols()) throw Error(ErrorCode::DimensionMismatch, "trace of non-square expression");
  AffineExpr out(Matrix{{e.constant().trace()}});
  out.owner_ = e.owner_;
  for (const auto& t : e.terms_) {
    if (t.row == t.col) out.terms_.push_back({t.var, 0, 0, t.coeff});
  }
  out.compress();
  return out;
}

AffineExpr trace_product(const Matrix& c, const AffineExpr& e) { return trace(c * e); }

LmiBuilder::LmiBuilder() : id_(next_builder_id.fetch_add(1)) {}

AffineExpr LmiBuilder::add_symmetric(const std::string& name, std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "variable dimension must be >= 1");
  vars_.push_back({name, dim, dim, true, num_vars_});
  AffineExpr e(Matrix(dim, dim));
  e.owner_ = id_;
  std::size_t k = num_vars_;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j, ++k) {
      e.terms_.push_back({k, i, j, 1.0});
      if (i != j) e.terms_.push_back({k, j, i, 1.0});
    }
  }
  num_vars_ = k;
  objective_.resize(num_vars_, 0.0);
  e.compress();
  return e;
}

AffineExpr LmiBuilder::add_matrix(const std::string& name, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw Error(ErrorCode::DimensionMismatch, "variable dimension must be >= 1");
  vars_.push_back({name, rows, cols, false, num_vars_});
  AffineExpr e(Matrix(rows, cols));
  e.owner_ = id_;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) e.terms_.push_back({num_vars_ + i * cols + j, i, j, 1.0});
  num_vars_ += rows * cols;
  objective_.resize(num_vars_, 0.0);
  e.compress();
  return e;
}

const LmiBuilder::Variable& LmiBuilder::variable(const std::string& name) const {
  for (const auto& v : vars_)
    if (v.name == name) return v;
  throw Error(ErrorCode::UnknownVariable, "no variable named '" + name + "'");
}

void LmiBuilder::check_owned(const AffineExpr& e) const {
  if (e.owner() != 0 && e.owner() != id_) {
    throw Error(ErrorCode::UnknownVariable, "expression uses variables of another builder");
  }
  for (const auto& t : e.terms()) {
    if (t.var >= num_vars_) throw Error(ErrorCode::UnknownVariable, "undeclared variable index");
  }
}

void LmiBuilder::add_psd(const AffineExpr& expr) {
  check_owned(expr);
  if (expr.rows() != expr.cols()) throw Error(ErrorCode::DimensionMismatch, "PSD constraint must be square");
  const std::size_t d = expr.rows();
  symmetrize(expr.constant(), ToleranceConfig{.symmetry = 1e-10});
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> coef;
  for (const auto& t : expr.terms()) coef[{t.var, t.row, t.col}] += t.coeff;
  LmiBlock block;
  block.dim = d;
  block.constant = 0.5 * (expr.constant() + expr.constant().transpose());
  for (const auto& [key, value] : coef) {
    const auto [var, r, c] = key;
    if (r > c) continue;
    if (r != c) {
      const auto it = coef.find({var, c, r});
      const double mirror = it == coef.end() ? 0.0 : it->second;
      if (std::abs(mirror - value) > 1e-10 * std::max(1.0, std::abs(value))) {
        throw Error(ErrorCode::NotSymmetric, "PSD constraint expression is not symmetric");
      }
    }
    if (value != 0.0) block.terms.push_back({var, r, c, value});
  }
  for (const auto& [key, value] : coef) {
    const auto [var, r, c] = key;
    if (r > c && !coef.contains({var, c, r}) && value != 0.0) {
      throw Error(ErrorCode::NotSymmetric, "PSD constraint expression is not symmetric");
    }
  }
  blocks_.push_back(std::move(block));
}

void LmiBuilder::add_equality(const AffineExpr& expr, const Matrix& rhs) {
  check_owned(expr);
  if (rhs.rows() != expr.rows() || rhs.cols() != expr.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "equality right-hand side shape");
  }
  std::vector<LinearEquality> rows(expr.rows() * expr.cols());
  for (std::size_t i = 0; i < expr.rows(); ++i)
    for (std::size_t j = 0; j < expr.cols(); ++j)
      rows[i * expr.cols() + j].rhs = rhs(i, j) - expr.constant()(i, j);
  for (const auto& t : expr.terms()) rows[t.row * expr.cols() + t.col].coeffs.emplace_back(t.var, t.coeff);
  for (auto& r : rows) {
    if (r.coeffs.empty()) {
      if (std::abs(r.rhs) > 1e-12) throw Error(ErrorCode::InvalidArgument, "equality has no variables");
      continue;
    }
    equalities_.push_back(std::move(r));
  }
}

void LmiBuilder::minimize(const AffineExpr& objective) {
  check_owned(objective);
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw Error(ErrorCode::DimensionMismatch, "objective must be a scalar expression");
  }
  std::fill(objective_.begin(), objective_.end(), 0.0);
  for (const auto& t : objective.terms()) objective_[t.var] += t.coeff;
  objective_offset_ = objective.constant()(0, 0);
}

SdpProblem LmiBuilder::build() const {
  SdpProblem p;
  p.num_vars = num_vars_;
  p.objective = objective_;
  p.objective.resize(num_vars_, 0.0);
  p.blocks = blocks_;
  p.equalities = equalities_;
  p.validate();
  return p;
}

std::vector<double> LmiBuilder::pack(const std::vector<Matrix>& values) const {
  if (values.size() != vars_.size()) throw Error(ErrorCode::DimensionMismatch, "one value per variable");
  std::vector<double> x(num_vars_, 0.0);
  for (std::size_t v = 0; v < vars_.size(); ++v) {
    const auto& var = vars_[v];
    const Matrix& val = values[v];
    if (val.rows() != var.rows || val.cols() != var.cols) {
      throw Error(ErrorCode::DimensionMismatch, "value shape for variable " + var.name);
    }
    std::size_t k = var.offset;
    if (var.symmetric) {
      for (std::size_t i = 0; i < var.rows; ++i)
        for (std::size_t j = i; j < var.cols; ++j) x[k++] = 0.5 * (val(i, j) + val(j, i));
    } else {
      for (std::size_t i = 0; i < var.rows; ++i)
        for (std::size_t j = 0; j < var.cols; ++j) x[k++] = val(i, j);
    }
  }
  return x;
}

}  // namespace ddlqr
