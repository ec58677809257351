#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ddlqr/matrix.hpp"
#include "ddlqr/sdp.hpp"

namespace ddlqr {

/// Matrix-valued affine function of the scalar variables of one LmiBuilder:
/// E(x) = constant + Σ_terms coeff·x_var at (row, col).
class AffineExpr {
 public:
  struct Term {
    std::size_t var;
    std::size_t row;
    std::size_t col;
    double coeff;
  };

  AffineExpr() = default;
  explicit AffineExpr(Matrix constant);
  static AffineExpr zeros(std::size_t rows, std::size_t cols) { return AffineExpr(Matrix(rows, cols)); }

  std::size_t rows() const noexcept { return constant_.rows(); }
  std::size_t cols() const noexcept { return constant_.cols(); }
  const Matrix& constant() const noexcept { return constant_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::uint64_t owner() const noexcept { return owner_; }

  AffineExpr transpose() const;
  Matrix evaluate(const std::vector<double>& x) const;

  /// [[E00, E01, …], [E10, …], …]; row heights and column widths must agree.
  static AffineExpr block_matrix(const std::vector<std::vector<AffineExpr>>& blocks);

  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double s);

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator*(const Matrix& c, const AffineExpr& e);
  friend AffineExpr operator*(const AffineExpr& e, const Matrix& c);

 private:
  friend class LmiBuilder;
  friend AffineExpr trace(const AffineExpr& e);
  void adopt_owner(std::uint64_t other);
  void compress();

  Matrix constant_;
  std::vector<Term> terms_;
  std::uint64_t owner_ = 0;  // 0: constant expression
};

AffineExpr operator+(AffineExpr a, const Matrix& b);
AffineExpr operator-(AffineExpr a, const Matrix& b);

/// Tr(C·E) as a 1×1 expression.
AffineExpr trace_product(const Matrix& c, const AffineExpr& e);
AffineExpr trace(const AffineExpr& e);

/// Collects matrix variables, affine PSD constraints, equalities and a
/// linear objective, and lowers them to an SdpProblem.
class LmiBuilder {
 public:
  struct Variable {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    bool symmetric;
    std::size_t offset;  // first scalar index
  };

  LmiBuilder();

  /// Symmetric dim × dim variable backed by dim(dim+1)/2 scalars.
  AffineExpr add_symmetric(const std::string& name, std::size_t dim);
  /// Unstructured rows × cols variable.
  AffineExpr add_matrix(const std::string& name, std::size_t rows, std::size_t cols);

  /// expr ⪰ 0. The expression must be square and symmetric.
  void add_psd(const AffineExpr& expr);
  /// expr = rhs entrywise.
  void add_equality(const AffineExpr& expr, const Matrix& rhs);
  /// Objective to minimize; must be 1×1.
  void minimize(const AffineExpr& objective);

  std::size_t num_vars() const noexcept { return num_vars_; }
  const std::vector<Variable>& variables() const noexcept { return vars_; }
  const Variable& variable(const std::string& name) const;
  double objective_offset() const noexcept { return objective_offset_; }

  SdpProblem build() const;

  /// Scalar vector of a point given the values of every declared variable,
  /// in declaration order.
  std::vector<double> pack(const std::vector<Matrix>& values) const;

 private:
  void check_owned(const AffineExpr& e) const;

  std::uint64_t id_;
  std::size_t num_vars_ = 0;
  std::vector<Variable> vars_;
  std::vector<LmiBlock> blocks_;
  std::vector<LinearEquality> equalities_;
  std::vector<double> objective_;
  double objective_offset_ = 0.0;
};

}  // namespace ddlqr
