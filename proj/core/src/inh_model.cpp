#include "dpdtest/inh_model.hpp"

#include "dpdtest/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>

namespace dpdtest {
namespace {

template <typename F>
double integrate(F&& f, const Support& s, const QuadratureOptions& opt) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, s.lower, s.upper, opt.max_depth, 1e-13, &error, &l1);
  if (!std::isfinite(value)) {
    throw IntegrationError("non-finite integral", error);
  }
  if (error > std::max(opt.absolute_tolerance, 1e-12 * l1)) {
    throw IntegrationError("adaptive quadrature did not converge", error);
  }
  return value;
}

}  // namespace

double InhModel::density(Index i, double y, const ParamPoint& theta) const {
  return std::exp(log_density(i, y, theta));
}

Support InhModel::support(Index i, const ParamPoint& theta) const {
  const auto [center, scale] = location_scale(i, theta);
  const double half = quadrature.half_width_scales * scale;
  return {center - half, center + half};
}

void InhModel::check_parameter(const ParamPoint& theta) const {
  if (theta.dim() != dim()) {
    throw UsageError("parameter has dimension " + std::to_string(theta.dim()) +
                     ", model expects " + std::to_string(dim()));
  }
  if (!theta.theta().allFinite()) throw DomainError("parameter has non-finite entries");
}

PowerIntegrals InhModel::power_integrals(Index i, const ParamPoint& theta, double c) const {
  return power_integrals_quadrature(i, theta, c);
}

PowerIntegrals InhModel::power_integrals_quadrature(Index i, const ParamPoint& theta,
                                                    double c) const {
  if (!(c >= 0.0)) throw DomainError("power integrals need c >= 0");
  check_parameter(theta);
  const Index p = dim();
  const Support s = support(i, theta);
  auto weight = [&](double y) { return std::exp((1.0 + c) * log_density(i, y, theta)); };

  PowerIntegrals out;
  out.mass = integrate(weight, s, quadrature);
  out.first.resize(p);
  out.second.resize(p, p);
  for (Index a = 0; a < p; ++a) {
    out.first(a) = integrate([&](double y) { return score(i, y, theta)(a) * weight(y); }, s,
                             quadrature);
    for (Index b = 0; b <= a; ++b) {
      const double v = integrate(
          [&](double y) {
            const Vector u = score(i, y, theta);
            return u(a) * u(b) * weight(y);
          },
          s, quadrature);
      out.second(a, b) = v;
      out.second(b, a) = v;
    }
  }
  return out;
}

double InhModel::power_mass(Index i, const ParamPoint& theta, double c) const {
  return power_integrals(i, theta, c).mass;
}

Vector InhModel::power_first(Index i, const ParamPoint& theta, double c) const {
  return power_integrals(i, theta, c).first;
}

std::optional<DerivBlocks> InhModel::deriv_blocks_closed_form(Index, const ParamPoint&,
                                                              const ParamPoint&, double) const {
  return std::nullopt;
}

std::optional<double> InhModel::dpd_closed_form(Index, const ParamPoint&, const ParamPoint&,
                                                double) const {
  return std::nullopt;
}

std::vector<bool> InhModel::log_scale_mask() const {
  return std::vector<bool>(static_cast<std::size_t>(dim()), false);
}

std::vector<ParamPoint> InhModel::initial_points(const ObservationSet&) const {
  throw UsageError("this model has no default starting points; supply an initial value");
}

std::optional<Matrix> InhModel::asymptotic_covariance(const ParamPoint&, double,
                                                      const Restriction*) const {
  return std::nullopt;
}

Vector xi_vector(const InhModel& model, Index i, const ParamPoint& theta, double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  return model.power_first(i, theta, tau);
}

PsiOmega psi_omega_matrices(const InhModel& model, const ParamPoint& theta, double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  const Index p = model.dim();
  const Index n = model.size();
  PsiOmega out{Matrix::Zero(p, p), Matrix::Zero(p, p)};
  for (Index i = 0; i < n; ++i) {
    const PowerIntegrals at_tau = model.power_integrals(i, theta, tau);
    const PowerIntegrals at_two_tau =
        tau == 0.0 ? at_tau : model.power_integrals(i, theta, 2.0 * tau);
    out.psi += at_tau.second;
    out.omega += at_two_tau.second - at_tau.first * at_tau.first.transpose();
  }
  out.psi /= static_cast<double>(n);
  out.omega /= static_cast<double>(n);
  if (!out.psi.allFinite() || !out.omega.allFinite()) {
    throw IntegrationError("non-finite Psi/Omega entries", 0.0);
  }
  return out;
}

Matrix a_matrix(const InhModel& model, const ParamPoint& theta0, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  const Index p = model.dim();
  const Index n = model.size();
  // Hessian of d_gamma(f_theta, f_theta0) at theta = theta0 is (1+gamma) int u u^T f^{1+gamma}.
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 0; i < n; ++i) a += model.power_integrals(i, theta0, gamma).second;
  a *= (1.0 + gamma) / static_cast<double>(n);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
    throw NumericalError("A matrix is not symmetric");
  }
  return 0.5 * (a + a.transpose());
}

}  // namespace dpdtest
