#include "dpdtest/dpd_test.hpp"

#include "dpdtest/dpd.hpp"
#include "dpdtest/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

namespace dpdtest {
namespace {

Matrix design_covariance(const Matrix& x) {
  return x.transpose() * x / static_cast<double>(x.rows());
}

void check_hypothesis_shape(const Matrix& x, const Matrix& l) {
  if (l.rows() != x.cols()) throw UsageError("L must have one row per coefficient");
  if (l.cols() < 1 || l.cols() > x.cols()) throw UsageError("need 1 <= r <= p restrictions");
  if (numerical_rank(l) != l.cols()) throw RankError("rank(L) < r");
}

// Sigma^{-1} L [L^T Sigma^{-1} L]^{-1} L^T = Q_x^T.
Matrix qx_transpose(const Matrix& x, const Matrix& l) { return qx_matrix(x, l).transpose(); }

TestReport finish_report(TestReport rep) {
  if (rep.statistic < -1e-10) {
    throw NumericalError("negative test statistic " + std::to_string(rep.statistic));
  }
  rep.statistic = std::max(rep.statistic, 0.0);
  rep.critical_value = mixture_quantile(rep.null_dist, rep.alpha);
  rep.p_value = mixture_survival(rep.null_dist, rep.statistic);
  rep.reject = rep.statistic > rep.critical_value;
  return rep;
}

void require_converged(const FitResult& fit, const char* which) {
  if (!fit.converged) {
    throw NumericalError(std::string(which) + " fit did not converge: " + fit.diagnostics);
  }
}

}  // namespace

double test_statistic_general(const InhModel& model, const ParamPoint& theta_hat,
                              const ParamPoint& theta_tilde, double gamma,
                              bool force_quadrature) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  double total = 0.0;
  for (Index i = 0; i < model.size(); ++i) {
    total += dpd(model, i, theta_hat, theta_tilde, gamma, force_quadrature).value;
  }
  return 2.0 * total;
}

double test_statistic_lrm(const Matrix& x, const ParamPoint& theta_hat,
                          const ParamPoint& theta_tilde, const Vector& beta0, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  const double sh = theta_hat.sigma();
  const double st = theta_tilde.sigma();
  if (!(sh > 0.0) || !(st > 0.0)) throw DomainError("scale estimates must be positive");
  if (beta0.size() != x.cols() || theta_hat.dim() != x.cols() + 1) {
    throw UsageError("coefficient length does not match the design");
  }
  const double n = static_cast<double>(x.rows());
  const Vector fitted_gap = x * (theta_hat.beta() - beta0);

  if (gamma == 0.0) {
    const double ratio = sh * sh / (st * st);
    return n * (std::log(st * st / (sh * sh)) - 1.0 + ratio) + fitted_gap.squaredNorm() / (st * st);
  }
  const double spread = gamma * sh * sh + st * st;
  const double c1 = (gamma * std::pow(sh, gamma) + std::pow(st, gamma)) /
                    ((1.0 + gamma) * std::pow(sh, gamma));
  const double c2 = st * std::sqrt(1.0 + gamma) / std::sqrt(spread);
  double sum = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    sum += std::exp(-gamma * fitted_gap(i) * fitted_gap(i) / (2.0 * spread));
  }
  const double lead = 2.0 * std::sqrt(1.0 + gamma) /
                      (gamma * std::pow(std::sqrt(2.0 * std::numbers::pi) * st, gamma));
  return lead * (n * c1 - c2 * sum);
}

double s_gamma(double gamma, double sigma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  return std::pow(2.0 * std::numbers::pi, -0.5 * gamma) * std::pow(sigma, -(gamma + 2.0)) *
         std::pow(1.0 + gamma, -1.5);
}

double zeta_one(double tau, double gamma, double sigma) {
  return (1.0 + gamma) * s_gamma(gamma, sigma) * lrm_asymp_variances(tau, sigma).v_beta;
}

Matrix qx_matrix(const Matrix& x, const Matrix& l) {
  check_hypothesis_shape(x, l);
  const Matrix sigma = design_covariance(x);
  if (numerical_rank(sigma) != x.cols()) throw RankError("X^T X / n is singular");
  const Index p = x.cols();
  const Matrix sigma_inv = sigma.ldlt().solve(Matrix::Identity(p, p));
  const Matrix middle = l.transpose() * sigma_inv * l;
  return l * middle.ldlt().solve(l.transpose() * sigma_inv);
}

Vector qx_eigenvalues(const Matrix& x, const Matrix& l) {
  check_hypothesis_shape(x, l);
  const Matrix sigma = design_covariance(x);
  if (numerical_rank(sigma) != x.cols()) throw RankError("X^T X / n is singular");
  // With Sigma = C C^T, C^{-1} Q_x C = K (K^T K)^{-1} K^T for K = C^{-1} L.
  const Eigen::LLT<Matrix> chol(sigma);
  const Matrix k = chol.matrixL().solve(l);
  const Matrix proj = k * (k.transpose() * k).ldlt().solve(k.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (proj + proj.transpose()));
  return eig.eigenvalues();
}

ChiSqMixture null_distribution_lrm(const Matrix& x, double sigma, const Matrix& l, double tau,
                                   double gamma) {
  const Vector lambda = qx_eigenvalues(x, l);
  const Index r = l.cols();
  const double z1 = zeta_one(tau, gamma, sigma);
  return ChiSqMixture(z1 * lambda.tail(r));
}

ChiSqMixture quadratic_form_law(const Matrix& a, const Matrix& cov, const Vector& mean) {
  const Index p = a.rows();
  if (a.cols() != p || cov.rows() != p || cov.cols() != p || mean.size() != p) {
    throw UsageError("quadratic form: shape mismatch");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ec(0.5 * (cov + cov.transpose()));
  const double cmax = ec.eigenvalues().cwiseAbs().maxCoeff();
  if (!(cmax > 0.0)) throw DomainError("covariance is zero");
  Vector root(p);
  Vector pinv_root(p);
  for (Index k = 0; k < p; ++k) {
    const double v = ec.eigenvalues()(k);
    if (v < -1e-10 * cmax) throw DomainError("covariance is not positive semidefinite");
    const bool keep = v > 1e-12 * cmax;
    root(k) = keep ? std::sqrt(v) : 0.0;
    pinv_root(k) = keep ? 1.0 / std::sqrt(v) : 0.0;
  }
  const Matrix& v = ec.eigenvectors();
  const Matrix s = v * root.asDiagonal() * v.transpose();
  const Matrix s_pinv = v * pinv_root.asDiagonal() * v.transpose();
  const Vector u = s_pinv * mean;
  if ((s * u - mean).norm() > 1e-8 * std::max(1.0, mean.norm())) {
    throw DomainError("mean shift is not in the range of the covariance");
  }

  const Matrix b = s * (0.5 * (a + a.transpose())) * s;
  Eigen::SelfAdjointEigenSolver<Matrix> eb(0.5 * (b + b.transpose()));
  const double bmax = eb.eigenvalues().maxCoeff();
  if (!(bmax > 0.0)) throw DomainError("quadratic form is identically zero");
  std::vector<double> w;
  std::vector<double> d2;
  for (Index k = 0; k < p; ++k) {
    const double lam = eb.eigenvalues()(k);
    if (lam <= 1e-10 * bmax) continue;
    const double delta = eb.eigenvectors().col(k).dot(u);
    w.push_back(lam);
    d2.push_back(delta * delta);
  }
  return ChiSqMixture(Eigen::Map<Vector>(w.data(), static_cast<Index>(w.size())),
                      Eigen::Map<Vector>(d2.data(), static_cast<Index>(d2.size())));
}

ChiSqMixture lrm_alternative_law(const Matrix& x, double sigma0, const Matrix& l, double tau,
                                 double gamma, const Vector& shift) {
  check_hypothesis_shape(x, l);
  if (shift.size() != x.cols()) throw UsageError("shift must have one entry per coefficient");
  const Index p = x.cols();
  const Matrix sigma = design_covariance(x);
  const Matrix sigma_inv = sigma.ldlt().solve(Matrix::Identity(p, p));
  const Matrix qt = qx_transpose(x, l);
  const double v_beta = lrm_asymp_variances(tau, sigma0).v_beta;
  const Matrix a = (1.0 + gamma) * s_gamma(gamma, sigma0) * sigma;
  Matrix cov = v_beta * sigma_inv * qt.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return quadratic_form_law(a, cov, qt * shift);
}

double contiguous_power(const Matrix& x, double sigma0, const Matrix& l, double tau,
                        double gamma, const Vector& delta1, double alpha) {
  return contaminated_power(x, sigma0, l, tau, gamma, delta1, 0.0,
                            Vector::Zero(delta1.size()), alpha);
}

double contaminated_power(const Matrix& x, double sigma0, const Matrix& l, double tau,
                          double gamma, const Vector& delta1, double eps, const Vector& d,
                          double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  const double crit = mixture_quantile(null_distribution_lrm(x, sigma0, l, tau, gamma), alpha);
  const ChiSqMixture law = lrm_alternative_law(x, sigma0, l, tau, gamma, delta1 + eps * d);
  return series_power(law, crit);
}

TestReport run_test(const NormalLinearModel& model, const ObservationSet& data,
                    const Restriction& restriction, double tau, double gamma, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (!restriction.is_linear()) {
    throw UsageError("the regression test needs a linear restriction on the coefficients");
  }
  TestReport rep;
  rep.tau = tau;
  rep.gamma = gamma;
  rep.alpha = alpha;
  rep.fit_hat = mdpde_fit(model, data, tau);
  require_converged(rep.fit_hat, "unrestricted");
  rep.fit_tilde = rmdpde_fit(model, data, tau, restriction);
  require_converged(rep.fit_tilde, "restricted");
  rep.theta_hat = rep.fit_hat.theta_hat;
  rep.theta_tilde = rep.fit_tilde.theta_hat;
  rep.statistic = test_statistic_lrm(model.design(), rep.theta_hat, rep.theta_tilde,
                                     rep.theta_tilde.beta(), gamma);
  rep.null_dist = null_distribution_lrm(model.design(), rep.theta_tilde.sigma(), restriction.l(),
                                        tau, gamma);
  return finish_report(std::move(rep));
}

TestReport run_test(const InhModel& model, const ObservationSet& data,
                    const Restriction& restriction, double tau, double gamma, double alpha,
                    const ChiSqMixture& null_dist) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  TestReport rep;
  rep.tau = tau;
  rep.gamma = gamma;
  rep.alpha = alpha;
  rep.fit_hat = mdpde_fit(model, data, tau);
  require_converged(rep.fit_hat, "unrestricted");
  rep.fit_tilde = rmdpde_fit(model, data, tau, restriction);
  require_converged(rep.fit_tilde, "restricted");
  rep.theta_hat = rep.fit_hat.theta_hat;
  rep.theta_tilde = rep.fit_tilde.theta_hat;
  rep.statistic = test_statistic_general(model, rep.theta_hat, rep.theta_tilde, gamma);
  rep.null_dist = null_dist;
  return finish_report(std::move(rep));
}

}  // namespace dpdtest
