#pragma once

#include "dpdtest/inh_model.hpp"
#include "dpdtest/restriction.hpp"

#include <optional>
#include <string>

namespace dpdtest {

struct FitResult {
  ParamPoint theta_hat;
  double objective_value = 0.0;
  /// Max-norm of the gradient of H_n in theta; projected onto the tangent
  /// space of the null set for restricted fits.
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool restricted = false;
  std::optional<Matrix> asymp_cov;
  std::string diagnostics;
};

struct FitOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  double constraint_tolerance = 1e-10;
};

/// Minimum DPD estimator: minimises objective_h over the full parameter space.
/// Without `init` the model's starting points are all tried and the lowest
/// converged objective wins. Throws BoundaryError if the best fit has a
/// positive parameter collapsed to zero.
FitResult mdpde_fit(const InhModel& model, const ObservationSet& data, double tau,
                    const std::optional<ParamPoint>& init = std::nullopt,
                    const FitOptions& options = {});

/// Restricted minimum DPD estimator over { theta : upsilon(theta) = 0 }.
/// Linear restrictions are solved exactly in null-space coordinates; general
/// ones by an augmented Lagrangian. Throws FeasibilityError when the
/// constraint cannot be met.
FitResult rmdpde_fit(const InhModel& model, const ObservationSet& data, double tau,
                     const Restriction& restriction,
                     const std::optional<ParamPoint>& init = std::nullopt,
                     const FitOptions& options = {});

/// Gradient of H_n projected onto the tangent space of the restriction at theta.
Vector projected_gradient(const InhModel& model, const ObservationSet& data,
                          const ParamPoint& theta, double tau, const Restriction* restriction);

struct AsympVariances {
  double v_beta;
  double v_e;
};

/// Asymptotic variance factors of the normal-regression MDPDE: beta has
/// covariance v_beta (X^T X)^{-1} and n^{1/2}(sigma_hat^2 - sigma^2) variance v_e.
AsympVariances lrm_asymp_variances(double tau, double sigma0);

/// I - L {L^T (X^T X)^{-1} L}^{-1} L^T (X^T X)^{-1}: maps the unrestricted
/// coefficient covariance to the restricted one.
Matrix restricted_projection(const Matrix& x, const Matrix& l);

/// G_{11.2} = G11 - G12 G22^{-1} G21 for the leading r x r block of `gram`.
Matrix leading_schur_complement(const Matrix& gram, Index r);
/// G_{22.1} = G22 - G21 G11^{-1} G12 for the trailing block after the first r.
Matrix trailing_schur_complement(const Matrix& gram, Index r);

}  // namespace dpdtest
