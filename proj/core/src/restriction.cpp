#include "dpdtest/restriction.hpp"

#include "dpdtest/errors.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace dpdtest {

Index numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index rank = 0;
  for (Index k = 0; k < s.size(); ++k) {
    if (s(k) > rel_tol * s(0)) ++rank;
  }
  return rank;
}

Restriction Restriction::linear(Matrix l, Vector l0) {
  if (l.cols() != l0.size()) {
    throw UsageError("linear restriction: L has " + std::to_string(l.cols()) +
                     " columns but l0 has " + std::to_string(l0.size()) + " entries");
  }
  if (l.cols() == 0 || l.cols() > l.rows()) {
    throw UsageError("linear restriction: need 1 <= r <= p");
  }
  if (numerical_rank(l) != l.cols()) {
    throw RankError("linear restriction: rank(L) < r");
  }
  Restriction out;
  out.kind_ = Kind::linear;
  out.r_ = l.cols();
  out.l_ = std::move(l);
  out.l0_ = std::move(l0);
  out.build_null_space();
  return out;
}

Restriction Restriction::first_components(Vector l0, Index num_coefficients) {
  const Index r = l0.size();
  if (r == 0 || r > num_coefficients) {
    throw UsageError("first-components restriction: need 1 <= r <= p");
  }
  Restriction out;
  out.kind_ = Kind::first_components;
  out.r_ = r;
  out.l_ = Matrix::Zero(num_coefficients, r);
  out.l_.topRows(r).setIdentity();
  out.l0_ = std::move(l0);
  out.particular_ = Vector::Zero(num_coefficients);
  out.particular_.head(r) = out.l0_;
  out.null_basis_ = Matrix::Zero(num_coefficients, num_coefficients - r);
  out.null_basis_.bottomRows(num_coefficients - r).setIdentity();
  return out;
}

Restriction Restriction::general(Index r, Map upsilon, JacobianMap jacobian) {
  if (r < 1) throw UsageError("general restriction: r must be positive");
  if (!upsilon || !jacobian) throw UsageError("general restriction: maps must be callable");
  Restriction out;
  out.kind_ = Kind::general;
  out.r_ = r;
  out.upsilon_ = std::move(upsilon);
  out.jacobian_ = std::move(jacobian);
  return out;
}

void Restriction::build_null_space() {
  const Index p = l_.rows();
  Eigen::HouseholderQR<Matrix> qr(l_);
  const Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  const Matrix rr = qr.matrixQR().topRows(r_).triangularView<Eigen::Upper>();
  // L = Q1 R  =>  L^T beta = R^T Q1^T beta = l0  =>  beta = Q1 R^{-T} l0 (minimum norm).
  const Vector w = rr.transpose().triangularView<Eigen::Lower>().solve(l0_);
  particular_ = q.leftCols(r_) * w;
  null_basis_ = q.rightCols(p - r_);
}

Vector Restriction::upsilon(const ParamPoint& theta) const {
  if (kind_ == Kind::general) {
    Vector v = upsilon_(theta.theta());
    if (v.size() != r_) throw UsageError("restriction map returned the wrong length");
    return v;
  }
  if (theta.dim() < l_.rows()) throw UsageError("restriction: parameter too short");
  return l_.transpose() * theta.theta().head(l_.rows()) - l0_;
}

Matrix Restriction::jacobian(const ParamPoint& theta) const {
  Matrix jac;
  if (kind_ == Kind::general) {
    jac = jacobian_(theta.theta());
    if (jac.rows() != theta.dim() || jac.cols() != r_) {
      throw UsageError("restriction Jacobian has the wrong shape");
    }
  } else {
    jac = Matrix::Zero(theta.dim(), r_);
    jac.topRows(l_.rows()) = l_;
  }
  if (numerical_rank(jac) != r_) {
    throw RankError("restriction Jacobian is rank deficient at the evaluated point");
  }
  return jac;
}

const Matrix& Restriction::l() const {
  if (!is_linear()) throw UsageError("restriction is not linear");
  return l_;
}

const Vector& Restriction::l0() const {
  if (!is_linear()) throw UsageError("restriction is not linear");
  return l0_;
}

const Vector& Restriction::particular() const {
  if (!is_linear()) throw UsageError("restriction is not linear");
  return particular_;
}

const Matrix& Restriction::null_basis() const {
  if (!is_linear()) throw UsageError("restriction is not linear");
  return null_basis_;
}

}  // namespace dpdtest
