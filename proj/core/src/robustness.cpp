#include "dpdtest/robustness.hpp"

#include "dpdtest/chisq_mixture.hpp"
#include "dpdtest/dpd_test.hpp"
#include "dpdtest/errors.hpp"
#include "dpdtest/estimators.hpp"
#include "dpdtest/normal_lrm.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>

#include <Eigen/Cholesky>

#include <cmath>

namespace dpdtest {
namespace {

void check_inputs(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (theta0.dim() != x.cols() + 1) throw UsageError("parameter does not match the design");
  if (!(theta0.sigma() > 0.0)) throw DomainError("sigma must be positive");
  if (t.size() != x.rows()) throw UsageError("need one contamination point per observation");
}

Matrix gram_inverse(const Matrix& x) {
  const Index p = x.cols();
  return (x.transpose() * x).ldlt().solve(Matrix::Identity(p, p));
}

double noncentral_survival(double df, double ncp, double q) {
  if (ncp == 0.0) {
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), q));
  }
  return boost::math::cdf(
      boost::math::complement(boost::math::non_central_chi_squared(df, ncp), q));
}

// Leading r covariates with the trailing ones regressed out, n x r.
Matrix residualized_leading(const Matrix& x, Index r) {
  const Index p = x.cols();
  const Matrix x1 = x.leftCols(r);
  if (r == p) return x1;
  const Matrix x2 = x.rightCols(p - r);
  const Matrix coef = (x2.transpose() * x2).ldlt().solve(x2.transpose() * x1);
  return x1 - x2 * coef;
}

}  // namespace

IfVector to_if_vector(const LrmInfluence& inf, IfTarget target, double tau) {
  IfVector out;
  out.value.resize(inf.beta.size() + 1);
  out.value.head(inf.beta.size()) = inf.beta;
  out.value(inf.beta.size()) = inf.sigma;
  out.target = target;
  out.tau = tau;
  return out;
}

Vector weighted_residuals(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                          double tau) {
  check_inputs(x, theta0, t, tau);
  const double s2 = theta0.sigma() * theta0.sigma();
  const Vector r = t - x * theta0.beta();
  return r.array() * (-tau * r.array().square() / (2.0 * s2)).exp();
}

LrmInfluence if_mdpde_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                          double tau) {
  check_inputs(x, theta0, t, tau);
  const double sigma = theta0.sigma();
  const double s2 = sigma * sigma;
  const double n = static_cast<double>(x.rows());
  const Vector r = t - x * theta0.beta();
  const Vector w = (-tau * r.array().square() / (2.0 * s2)).exp();
  const Vector psi = r.cwiseProduct(w);

  LrmInfluence out;
  out.beta = std::pow(1.0 + tau, 1.5) * gram_inverse(x) * (x.transpose() * psi);
  const double spread = 2.0 + tau * tau;
  const double lead = 2.0 * std::pow(1.0 + tau, 2.5) / (n * spread);
  const double shift = 2.0 * tau * (1.0 + tau) * s2 / spread;
  out.sigma_sq = lead * ((r.array().square() - s2) * w.array()).sum() + shift;
  out.sigma = out.sigma_sq / (2.0 * sigma);
  return out;
}

LrmInfluence if_rmdpde_lrm_projected(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                                     double tau, const Restriction& restriction) {
  if (!restriction.is_linear()) throw UsageError("influence functions need a linear restriction");
  LrmInfluence out = if_mdpde_lrm(x, theta0, t, tau);
  out.beta = restricted_projection(x, restriction.l()).transpose() * out.beta;
  return out;
}

LrmInfluence if_rmdpde_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                           double tau, const Restriction& restriction) {
  if (restriction.kind() != Restriction::Kind::first_components) {
    return if_rmdpde_lrm_projected(x, theta0, t, tau, restriction);
  }
  LrmInfluence out = if_mdpde_lrm(x, theta0, t, tau);
  const Index p = x.cols();
  const Index r = restriction.r();
  const Vector psi = weighted_residuals(x, theta0, t, tau);
  Vector beta = Vector::Zero(p);
  if (r < p) {
    const Matrix x2 = x.rightCols(p - r);
    beta.tail(p - r) =
        std::pow(1.0 + tau, 1.5) * (x2.transpose() * x2).ldlt().solve(x2.transpose() * psi);
  }
  out.beta = beta;
  return out;
}

Vector d_tau_vector(const IfVector& if_mdpde, const IfVector& if_rmdpde) {
  if (if_mdpde.tau != if_rmdpde.tau) throw UsageError("influence vectors use different tau");
  if (if_mdpde.value.size() != if_rmdpde.value.size()) {
    throw UsageError("influence vectors have different lengths");
  }
  return if_mdpde.value - if_rmdpde.value;
}

Vector d_tau_beta(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                  const Restriction& restriction) {
  const IfVector u = to_if_vector(if_mdpde_lrm(x, theta0, t, tau), IfTarget::mdpde, tau);
  const IfVector ut =
      to_if_vector(if_rmdpde_lrm(x, theta0, t, tau, restriction), IfTarget::rmdpde, tau);
  return d_tau_vector(u, ut).head(x.cols());
}

double if2_statistic(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                     double gamma, const Restriction& restriction) {
  const IfVector u = to_if_vector(if_mdpde_lrm(x, theta0, t, tau), IfTarget::mdpde, tau);
  const IfVector ut =
      to_if_vector(if_rmdpde_lrm(x, theta0, t, tau, restriction), IfTarget::rmdpde, tau);
  const Vector d = d_tau_vector(u, ut);
  const NormalLinearModel model(x);
  const Matrix a = a_matrix(model, theta0, gamma);
  return static_cast<double>(x.rows()) * d.dot(a * d);
}

double if2_statistic_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                         double gamma, const Restriction& restriction) {
  const Vector d = d_tau_beta(x, theta0, t, tau, restriction);
  const Vector xd = x * d;
  return (1.0 + gamma) * s_gamma(gamma, theta0.sigma()) * xd.squaredNorm();
}

double if2_first_components(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                            double tau, double gamma, Index r) {
  const Index p = x.cols();
  if (r < 1 || r > p) throw UsageError("need 1 <= r <= p");
  const Vector psi = weighted_residuals(x, theta0, t, tau);
  const Matrix xr = residualized_leading(x, r);
  const Vector score = xr.transpose() * psi;
  const Matrix schur = leading_schur_complement(x.transpose() * x, r);
  return (1.0 + gamma) * s_gamma(gamma, theta0.sigma()) * std::pow(1.0 + tau, 3.0) *
         score.dot(schur.ldlt().solve(score));
}

Vector power_gradient_lrm(const Matrix& x, double sigma0, const Matrix& l, double tau,
                          double gamma, const Vector& delta, double alpha) {
  const double crit = mixture_quantile(null_distribution_lrm(x, sigma0, l, tau, gamma), alpha);
  const double h = 1e-5 * std::max(1.0, delta.norm());
  auto power = [&](const Vector& d) {
    return series_power(lrm_alternative_law(x, sigma0, l, tau, gamma, d), crit);
  };
  Vector grad(delta.size());
  for (Index k = 0; k < delta.size(); ++k) {
    Vector up = delta;
    Vector dn = delta;
    up(k) += h;
    dn(k) -= h;
    grad(k) = (power(up) - power(dn)) / (2.0 * h);
  }
  return grad;
}

double pif(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau, double gamma,
           const Restriction& restriction, const Vector& delta1, double alpha) {
  if (delta1.size() != x.cols()) throw UsageError("Delta_1 must have one entry per coefficient");
  const Vector d = d_tau_beta(x, theta0, t, tau, restriction);
  const Vector k =
      power_gradient_lrm(x, theta0.sigma(), restriction.l(), tau, gamma, delta1, alpha);
  return d.dot(k);
}

double lif(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau, double gamma,
           const Restriction& restriction, double alpha) {
  return pif(x, theta0, t, tau, gamma, restriction, Vector::Zero(x.cols()), alpha);
}

double pif_first_components(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                            double tau, double /*gamma*/, Index r, const Vector& delta1,
                            double alpha) {
  const Index p = x.cols();
  if (r < 1 || r > p) throw UsageError("need 1 <= r <= p");
  if (delta1.size() != p) throw UsageError("Delta_1 must have one entry per coefficient");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  // gamma only rescales the null law, so the chi-square cut-off below is free of it.
  const double n = static_cast<double>(x.rows());
  const double sigma0 = theta0.sigma();
  const double v_beta = lrm_asymp_variances(tau, sigma0).v_beta;
  const Vector d1 = delta1.head(r);
  const Matrix schur = leading_schur_complement(x.transpose() * x / n, r);
  const double ncp = d1.dot(schur * d1) / v_beta;
  const double df = static_cast<double>(r);
  const double c =
      boost::math::quantile(boost::math::complement(boost::math::chi_squared(df), alpha));
  const double k = (noncentral_survival(df + 2.0, ncp, c) - noncentral_survival(df, ncp, c)) *
                   std::pow(1.0 + tau, 1.5) / (n * v_beta);
  const Vector psi = weighted_residuals(x, theta0, t, tau);
  const Vector proj = residualized_leading(x, r) * d1;
  return k * proj.dot(psi);
}

}  // namespace dpdtest
