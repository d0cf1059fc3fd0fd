#include "dpdtest/normal_lrm.hpp"

#include "dpdtest/errors.hpp"
#include "dpdtest/estimators.hpp"
#include "dpdtest/restriction.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dpdtest {
namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// Least absolute deviations by iteratively reweighted least squares.
Vector lad_coefficients(const Matrix& x, const Vector& y, const Vector& start) {
  Vector beta = start;
  for (int iter = 0; iter < 50; ++iter) {
    const Vector resid = y - x * beta;
    const Vector w = resid.cwiseAbs().cwiseMax(1e-6).cwiseInverse();
    const Matrix xtwx = x.transpose() * w.asDiagonal() * x;
    const Vector next = xtwx.ldlt().solve(x.transpose() * w.asDiagonal() * y);
    if (!next.allFinite()) break;
    const double change = (next - beta).norm();
    beta = next;
    if (change <= 1e-10 * std::max(1.0, beta.norm())) break;
  }
  return beta;
}

}  // namespace

NormalLinearModel::NormalLinearModel(Matrix x) : x_(std::move(x)) {
  if (x_.rows() < 1 || x_.cols() < 1) throw UsageError("design matrix is empty");
  if (!x_.allFinite()) throw DomainError("design matrix has non-finite entries");
  if (numerical_rank(x_) != x_.cols()) {
    throw RankError("design matrix does not have full column rank");
  }
}

double NormalLinearModel::mean(Index i, const ParamPoint& theta) const {
  return x_.row(i).dot(theta.theta().head(x_.cols()));
}

void NormalLinearModel::check_parameter(const ParamPoint& theta) const {
  InhModel::check_parameter(theta);
  if (!(theta.sigma() > 0.0)) throw DomainError("sigma must be positive");
}

double NormalLinearModel::log_density(Index i, double y, const ParamPoint& theta) const {
  const double sigma = theta.sigma();
  const double z = (y - mean(i, theta)) / sigma;
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma) - 0.5 * z * z;
}

Vector NormalLinearModel::score(Index i, double y, const ParamPoint& theta) const {
  const double sigma = theta.sigma();
  const double resid = y - mean(i, theta);
  Vector u(dim());
  u.head(x_.cols()) = x_.row(i).transpose() * (resid / (sigma * sigma));
  u(x_.cols()) = (resid * resid / (sigma * sigma) - 1.0) / sigma;
  return u;
}

std::pair<double, double> NormalLinearModel::location_scale(Index i,
                                                            const ParamPoint& theta) const {
  return {mean(i, theta), theta.sigma()};
}

PowerIntegrals NormalLinearModel::power_integrals(Index i, const ParamPoint& theta,
                                                  double c) const {
  if (!(c >= 0.0)) throw DomainError("power integrals need c >= 0");
  check_parameter(theta);
  // f^{1+c} = mass * N(mu, sigma^2 / (1+c)); moments of that normal give the rest.
  const double sigma = theta.sigma();
  const double s2 = sigma * sigma;
  const double mass = normal::power_mass(sigma, c);
  const Index p = x_.cols();
  PowerIntegrals out;
  out.mass = mass;
  out.first = Vector::Zero(dim());
  out.first(p) = -mass * c / ((1.0 + c) * sigma);
  out.second = Matrix::Zero(dim(), dim());
  const auto xi = x_.row(i).transpose();
  out.second.topLeftCorner(p, p) = (mass / (s2 * (1.0 + c))) * (xi * xi.transpose());
  out.second(p, p) = mass * (2.0 + c * c) / ((1.0 + c) * (1.0 + c) * s2);
  return out;
}

double NormalLinearModel::power_mass(Index, const ParamPoint& theta, double c) const {
  if (!(c >= 0.0)) throw DomainError("power integrals need c >= 0");
  if (!(theta.sigma() > 0.0)) throw DomainError("sigma must be positive");
  return normal::power_mass(theta.sigma(), c);
}

Vector NormalLinearModel::power_first(Index, const ParamPoint& theta, double c) const {
  const double mass = power_mass(0, theta, c);
  Vector first = Vector::Zero(dim());
  first(x_.cols()) = -mass * c / ((1.0 + c) * theta.sigma());
  return first;
}

std::optional<DerivBlocks> NormalLinearModel::deriv_blocks_closed_form(
    Index i, const ParamPoint& theta1, const ParamPoint& theta2, double gamma) const {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  check_parameter(theta1);
  check_parameter(theta2);
  // Exact gradient and Hessian of the closed form in (mu1, s1, mu2, s2) by
  // nested forward-mode differentiation, then the chain rule mu = x^T beta.
  using Inner = Eigen::AutoDiffScalar<Eigen::Vector4d>;
  using Outer = Eigen::AutoDiffScalar<Eigen::Matrix<Inner, 4, 1>>;
  auto seed = [](double v, int k) {
    Outer o;
    o.value() = Inner(v, 4, k);
    o.derivatives().resize(4);
    for (int j = 0; j < 4; ++j) {
      o.derivatives()(j) = Inner(j == k ? 1.0 : 0.0, Eigen::Vector4d::Zero());
    }
    return o;
  };
  const Outer d = normal::dpd(seed(mean(i, theta1), 0), seed(theta1.sigma(), 1),
                              seed(mean(i, theta2), 2), seed(theta2.sigma(), 3), gamma);
  Eigen::Vector4d grad = d.value().derivatives();
  Eigen::Matrix4d hess;
  for (int j = 0; j < 4; ++j) hess.row(j) = d.derivatives()(j).derivatives().transpose();
  hess = 0.5 * (hess + hess.transpose());
  if (!grad.allFinite() || !hess.allFinite()) {
    throw NumericalError("non-finite divergence derivatives");
  }

  const Index p = x_.cols();
  Matrix jac = Matrix::Zero(2, dim());
  jac.block(0, 0, 1, p) = x_.row(i);
  jac(1, p) = 1.0;
  DerivBlocks out;
  out.m1 = jac.transpose() * grad.head<2>();
  out.m2 = jac.transpose() * grad.tail<2>();
  out.a11 = jac.transpose() * hess.topLeftCorner<2, 2>() * jac;
  out.a12 = jac.transpose() * hess.topRightCorner<2, 2>() * jac;
  out.a21 = out.a12.transpose();
  out.a22 = jac.transpose() * hess.bottomRightCorner<2, 2>() * jac;
  return out;
}

std::optional<double> NormalLinearModel::dpd_closed_form(Index i, const ParamPoint& theta1,
                                                         const ParamPoint& theta2,
                                                         double c) const {
  check_parameter(theta1);
  check_parameter(theta2);
  return normal::dpd(mean(i, theta1), theta1.sigma(), mean(i, theta2), theta2.sigma(), c);
}

std::vector<bool> NormalLinearModel::log_scale_mask() const {
  std::vector<bool> mask(static_cast<std::size_t>(dim()), false);
  mask.back() = true;
  return mask;
}

std::vector<ParamPoint> NormalLinearModel::initial_points(const ObservationSet& data) const {
  if (data.y.size() != size()) throw UsageError("response length does not match the design");
  const ParamPoint ols = ols_fit(x_, data.y);
  const Vector beta = ols.beta();
  const double sigma = std::max(ols.sigma(), 1e-8);

  const Matrix xtx_inv = (x_.transpose() * x_).ldlt().solve(Matrix::Identity(x_.cols(), x_.cols()));
  const Vector jitter = 0.5 * sigma * xtx_inv.diagonal().cwiseSqrt();

  const Vector lad = lad_coefficients(x_, data.y, beta);
  std::vector<double> abs_resid(static_cast<std::size_t>(size()));
  const Vector resid = data.y - x_ * lad;
  for (Index i = 0; i < size(); ++i) abs_resid[static_cast<std::size_t>(i)] = std::abs(resid(i));
  double mad = 1.4826 * median(abs_resid);
  if (!(mad > 1e-8 * sigma)) mad = sigma;

  return {
      ols,
      ParamPoint::regression(beta + jitter, sigma),
      ParamPoint::regression(beta - jitter, sigma),
      ParamPoint::regression(lad, mad),
      ParamPoint::regression(lad, sigma),
  };
}

std::optional<Matrix> NormalLinearModel::asymptotic_covariance(
    const ParamPoint& theta, double tau, const Restriction* restriction) const {
  if (restriction != nullptr && !restriction->is_linear()) return std::nullopt;
  const Index p = x_.cols();
  const double sigma = theta.sigma();
  const auto [v_beta, v_e] = lrm_asymp_variances(tau, sigma);
  const Matrix xtx = x_.transpose() * x_;
  Matrix beta_cov = v_beta * xtx.ldlt().solve(Matrix::Identity(p, p));
  if (restriction != nullptr) {
    // (X^T X)^{-1} P is symmetric and is the covariance of the projected estimate.
    beta_cov = beta_cov * restricted_projection(x_, restriction->l());
    beta_cov = 0.5 * (beta_cov + beta_cov.transpose());
  }
  Matrix cov = Matrix::Zero(dim(), dim());
  cov.topLeftCorner(p, p) = beta_cov;
  // var(sigma^2) ~ v_e / n, delta method to sigma.
  cov(p, p) = v_e / (static_cast<double>(size()) * 4.0 * sigma * sigma);
  return cov;
}

ParamPoint ols_fit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw UsageError("ols_fit: shape mismatch");
  const Vector beta = x.colPivHouseholderQr().solve(y);
  const double rss = (y - x * beta).squaredNorm();
  return ParamPoint::regression(beta, std::sqrt(rss / static_cast<double>(y.size())));
}

}  // namespace dpdtest
