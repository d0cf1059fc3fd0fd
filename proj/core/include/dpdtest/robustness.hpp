#pragma once

#include "dpdtest/restriction.hpp"
#include "dpdtest/types.hpp"

namespace dpdtest {

/// Influence of contamination at t = (t_1..t_n), one point per observation,
/// on the regression coefficients and the error scale.
struct LrmInfluence {
  Vector beta;
  double sigma = 0.0;
  double sigma_sq = 0.0;  // influence on sigma^2; sigma = sigma_sq / (2 sigma0)
};

enum class IfTarget { mdpde, rmdpde };

struct IfVector {
  Vector value;  // (beta, sigma)
  IfTarget target = IfTarget::mdpde;
  double tau = 0.0;
};

IfVector to_if_vector(const LrmInfluence& inf, IfTarget target, double tau);

/// psi_i = r_i exp(-tau r_i^2 / (2 sigma^2)), r_i = t_i - x_i^T beta.
Vector weighted_residuals(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau);

LrmInfluence if_mdpde_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                          double tau);

/// Linear restrictions use the projection P^T of the unrestricted influence;
/// first-components restrictions the explicit block form.
LrmInfluence if_rmdpde_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                           double tau, const Restriction& restriction);

/// Same as if_rmdpde_lrm but always through the projection, for any linear kind.
LrmInfluence if_rmdpde_lrm_projected(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                                     double tau, const Restriction& restriction);

/// Componentwise IF(MDPDE) - IF(RMDPDE). Throws UsageError on mismatched tau or length.
Vector d_tau_vector(const IfVector& if_mdpde, const IfVector& if_rmdpde);

/// Coefficient block of d_tau_vector for the regression model.
Vector d_tau_beta(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                  const Restriction& restriction);

/// n D^T A_n^gamma D with A_n from the generic divergence Hessian.
double if2_statistic(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                     double gamma, const Restriction& restriction);

/// (1+gamma) s_gamma D_beta^T (X^T X) D_beta.
double if2_statistic_lrm(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau,
                         double gamma, const Restriction& restriction);

/// Explicit form for H0: beta_1..beta_r fixed.
double if2_first_components(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                            double tau, double gamma, Index r);

/// Gradient of the asymptotic power in the mean-shift slot at `delta`
/// (central differences, step 1e-5 max(1, |delta|)).
Vector power_gradient_lrm(const Matrix& x, double sigma0, const Matrix& l, double tau,
                          double gamma, const Vector& delta, double alpha);

/// Power influence function D_beta^T grad P(Delta_1).
double pif(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau, double gamma,
           const Restriction& restriction, const Vector& delta1, double alpha);

/// Level influence function, pif at Delta_1 = 0.
double lif(const Matrix& x, const ParamPoint& theta0, const Vector& t, double tau, double gamma,
           const Restriction& restriction, double alpha);

/// Explicit power influence function for H0: beta_1..beta_r fixed.
double pif_first_components(const Matrix& x, const ParamPoint& theta0, const Vector& t,
                            double tau, double gamma, Index r, const Vector& delta1,
                            double alpha);

}  // namespace dpdtest
