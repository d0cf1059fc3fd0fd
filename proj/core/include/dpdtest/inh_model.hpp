#pragma once

#include "dpdtest/types.hpp"

#include <vector>

namespace dpdtest {

class Restriction;

/// Integrals of powers of the model density against its score:
///   mass   = int f^{1+c}
///   first  = int u f^{1+c}
///   second = int u u^T f^{1+c}
struct PowerIntegrals {
  double mass = 0.0;
  Vector first;
  Matrix second;
};

/// First and second derivatives of d_gamma(f_i(.;theta1), f_i(.;theta2)) in
/// each argument slot. a12 = d^2 / d theta1 d theta2^T, a21 = a12^T.
struct DerivBlocks {
  Vector m1;
  Vector m2;
  Matrix a11;
  Matrix a12;
  Matrix a21;
  Matrix a22;
};

/// Integration window for the i-th density at theta: [lower, upper].
struct Support {
  double lower;
  double upper;
};

/// Quadrature settings used by every generic (non closed-form) integral.
struct QuadratureOptions {
  double half_width_scales = 12.0;  // window is center +/- this many scales
  double absolute_tolerance = 1e-10;
  unsigned max_depth = 18;
};

/// An independent non-homogeneous parametric family {f_i(.; theta)}, i = 0..n-1.
///
/// Subclasses provide densities and scores. Integral services default to
/// adaptive Gauss-Kronrod quadrature over `support()`; families with closed
/// forms override them.
class InhModel {
 public:
  virtual ~InhModel() = default;

  virtual Index size() const = 0;
  virtual Index dim() const = 0;

  virtual double log_density(Index i, double y, const ParamPoint& theta) const = 0;
  virtual Vector score(Index i, double y, const ParamPoint& theta) const = 0;
  /// Center and scale used to place the quadrature window.
  virtual std::pair<double, double> location_scale(Index i, const ParamPoint& theta) const = 0;

  double density(Index i, double y, const ParamPoint& theta) const;
  Support support(Index i, const ParamPoint& theta) const;

  /// Throws DomainError if `theta` is outside the parameter space.
  virtual void check_parameter(const ParamPoint& theta) const;

  virtual PowerIntegrals power_integrals(Index i, const ParamPoint& theta, double c) const;
  /// Cheap accessors for the pieces the estimators need on every iteration.
  virtual double power_mass(Index i, const ParamPoint& theta, double c) const;
  virtual Vector power_first(Index i, const ParamPoint& theta, double c) const;
  /// Always integrates numerically, whatever the subclass overrides.
  PowerIntegrals power_integrals_quadrature(Index i, const ParamPoint& theta, double c) const;

  /// d_c(f_i(.;theta1), f_i(.;theta2)) if the family knows it in closed form.
  virtual std::optional<double> dpd_closed_form(Index i, const ParamPoint& theta1,
                                                const ParamPoint& theta2, double c) const;

  /// Exact derivative blocks of the divergence, if the family provides them.
  virtual std::optional<DerivBlocks> deriv_blocks_closed_form(Index i, const ParamPoint& theta1,
                                                              const ParamPoint& theta2,
                                                              double gamma) const;

  /// Coordinates optimised on the log scale (positive parameters).
  virtual std::vector<bool> log_scale_mask() const;

  /// Starting points for the estimators, best guess first.
  virtual std::vector<ParamPoint> initial_points(const ObservationSet& data) const;

  /// Large-sample covariance of the (restricted) estimator, when known.
  virtual std::optional<Matrix> asymptotic_covariance(const ParamPoint& theta, double tau,
                                                      const Restriction* restriction) const;

  QuadratureOptions quadrature;
};

/// int u_i f_i^{1+tau} at theta (the model-evaluated xi_i).
Vector xi_vector(const InhModel& model, Index i, const ParamPoint& theta, double tau);

struct PsiOmega {
  Matrix psi;
  Matrix omega;
};

/// Psi_n and Omega_n at the model plug-in g_i = f_i(.; theta).
PsiOmega psi_omega_matrices(const InhModel& model, const ParamPoint& theta, double tau);

/// A_n^gamma(theta0): the average Hessian of d_gamma(f_i(.;theta), f_i(.;theta0)) at theta0.
Matrix a_matrix(const InhModel& model, const ParamPoint& theta0, double gamma);

}  // namespace dpdtest
