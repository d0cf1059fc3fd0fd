#pragma once

#include "dpdtest/types.hpp"

#include <functional>

namespace dpdtest {

/// The null set Theta_0 = { theta : upsilon(theta) = 0_r }.
///
/// Linear kinds constrain the leading coordinates of theta (the regression
/// coefficients): upsilon(theta) = L^T beta - l0. `L` has one row per
/// coefficient; its Jacobian with respect to the full theta is L padded with
/// zero rows.
class Restriction {
 public:
  enum class Kind { general, linear, first_components };

  using Map = std::function<Vector(const Vector&)>;
  using JacobianMap = std::function<Matrix(const Vector&)>;

  /// L^T beta = l0. Throws RankError if rank(L) < r.
  static Restriction linear(Matrix l, Vector l0);
  /// beta_1..beta_r = l0 over `num_coefficients` coefficients.
  static Restriction first_components(Vector l0, Index num_coefficients);
  /// Arbitrary smooth constraints; `jacobian` returns dim x r.
  static Restriction general(Index r, Map upsilon, JacobianMap jacobian);

  Kind kind() const { return kind_; }
  Index r() const { return r_; }
  bool is_linear() const { return kind_ != Kind::general; }

  Vector upsilon(const ParamPoint& theta) const;
  /// Jacobian of upsilon with respect to theta, dim x r. Checks rank r.
  Matrix jacobian(const ParamPoint& theta) const;

  /// Coefficient matrix L (num_coefficients x r); linear kinds only.
  const Matrix& l() const;
  const Vector& l0() const;

  /// Null-space parameterisation beta = particular + basis * z of
  /// { beta : L^T beta = l0 }; linear kinds only.
  const Vector& particular() const;
  const Matrix& null_basis() const;

 private:
  Restriction() = default;
  void build_null_space();

  Kind kind_ = Kind::general;
  Index r_ = 0;
  Matrix l_;
  Vector l0_;
  Vector particular_;
  Matrix null_basis_;
  Map upsilon_;
  JacobianMap jacobian_;
};

/// Numerical rank: singular values above rel_tol * largest.
Index numerical_rank(const Matrix& m, double rel_tol = 1e-10);

}  // namespace dpdtest
