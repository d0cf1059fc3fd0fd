#pragma once

#include "dpdtest/inh_model.hpp"

#include <cmath>
#include <numbers>

namespace dpdtest {

/// Fixed-design normal linear regression: y_i ~ N(x_i^T beta, sigma^2).
///
/// Parameter layout is (beta_1..beta_p, sigma). All power integrals and DPD
/// values are available in closed form.
class NormalLinearModel final : public InhModel {
 public:
  /// Throws RankError unless `x` has full column rank.
  explicit NormalLinearModel(Matrix x);

  Index size() const override { return x_.rows(); }
  Index dim() const override { return x_.cols() + 1; }
  Index num_coefficients() const { return x_.cols(); }
  const Matrix& design() const { return x_; }

  double mean(Index i, const ParamPoint& theta) const;

  double log_density(Index i, double y, const ParamPoint& theta) const override;
  Vector score(Index i, double y, const ParamPoint& theta) const override;
  std::pair<double, double> location_scale(Index i, const ParamPoint& theta) const override;
  void check_parameter(const ParamPoint& theta) const override;

  PowerIntegrals power_integrals(Index i, const ParamPoint& theta, double c) const override;
  std::optional<double> dpd_closed_form(Index i, const ParamPoint& theta1,
                                        const ParamPoint& theta2, double c) const override;
  double power_mass(Index i, const ParamPoint& theta, double c) const override;
  Vector power_first(Index i, const ParamPoint& theta, double c) const override;
  std::optional<DerivBlocks> deriv_blocks_closed_form(Index i, const ParamPoint& theta1,
                                                      const ParamPoint& theta2,
                                                      double gamma) const override;
  std::vector<bool> log_scale_mask() const override;
  std::vector<ParamPoint> initial_points(const ObservationSet& data) const override;
  std::optional<Matrix> asymptotic_covariance(const ParamPoint& theta, double tau,
                                              const Restriction* restriction) const override;

 private:
  Matrix x_;
};

/// Ordinary least squares fit: beta = (X^T X)^{-1} X^T y, sigma^2 = RSS / n.
ParamPoint ols_fit(const Matrix& x, const Vector& y);

namespace normal {

/// int phi(y; mu, sigma)^{1+c} dy = (2 pi sigma^2)^{-c/2} (1+c)^{-1/2}.
inline double power_mass(double sigma, double c) {
  return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.5 * c) / std::sqrt(1.0 + c);
}

/// d_c(N(mu1, s1^2), N(mu2, s2^2)). Generic in the scalar type so it can be
/// differentiated with Eigen's AutoDiffScalar.
template <typename T>
T dpd(const T& mu1, const T& s1, const T& mu2, const T& s2, double c) {
  using std::exp;
  using std::log;
  using std::sqrt;
  const T diff = mu1 - mu2;
  if (c == 0.0) {
    return log(s2 / s1) + (s1 * s1 + diff * diff) / (2.0 * s2 * s2) - 0.5;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const T s1sq = s1 * s1;
  const T s2sq = s2 * s2;
  const T scale2 = exp(-0.5 * c * log(two_pi * s2sq));
  const T mass2 = scale2 / std::sqrt(1.0 + c);
  const T mass1 = exp(-0.5 * c * log(two_pi * s1sq)) / std::sqrt(1.0 + c);
  const T spread = s2sq + c * s1sq;
  const T cross = scale2 * s2 / sqrt(spread) * exp(-c * diff * diff / (2.0 * spread));
  return mass2 - (1.0 + 1.0 / c) * cross + mass1 / c;
}

}  // namespace normal
}  // namespace dpdtest
