#include "dpdtest/dpd.hpp"

#include "dpdtest/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace dpdtest {
namespace {

double quadrature_dpd(const InhModel& model, Index i, const ParamPoint& theta1,
                      const ParamPoint& theta2, double c) {
  const Support s1 = model.support(i, theta1);
  const Support s2 = model.support(i, theta2);
  const double lo = std::min(s1.lower, s2.lower);
  const double hi = std::max(s1.upper, s2.upper);

  // Written as f2^c (f2 - f1) + f1 f2^c expm1(c (l1 - l2)) / c so that small c
  // does not cancel two O(1/c) terms.
  auto integrand = [&](double y) {
    const double l1 = model.log_density(i, y, theta1);
    const double l2 = model.log_density(i, y, theta2);
    if (std::isinf(l1) && l1 < 0.0) return 0.0;
    const double f1 = std::exp(l1);
    if (c == 0.0) return f1 * (l1 - l2);
    const double f2 = std::exp(l2);
    const double f2c = std::exp(c * l2);
    return f2c * (f2 - f1) + f1 * f2c * std::expm1(c * (l1 - l2)) / c;
  };

  double error = 0.0;
  double l1_norm = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, lo, hi, model.quadrature.max_depth, 1e-13, &error, &l1_norm);
  if (!std::isfinite(value)) throw DomainError("divergence integral is not finite");
  if (error > std::max(model.quadrature.absolute_tolerance, 1e-12 * l1_norm)) {
    throw IntegrationError("divergence quadrature did not converge", error);
  }
  return value;
}

double step_for(double v, double rel) { return rel * std::max(1.0, std::abs(v)); }

}  // namespace

DpdValue dpd(const InhModel& model, Index i, const ParamPoint& theta1, const ParamPoint& theta2,
             double c, bool force_quadrature) {
  if (!(c >= 0.0)) throw DomainError("divergence index must be >= 0");
  model.check_parameter(theta1);
  model.check_parameter(theta2);
  DpdValue out;
  out.tau_or_gamma = c;
  std::optional<double> closed;
  if (!force_quadrature) closed = model.dpd_closed_form(i, theta1, theta2, c);
  if (closed) {
    out.value = *closed;
    out.method = DpdMethod::closed_form;
  } else {
    out.value = quadrature_dpd(model, i, theta1, theta2, c);
    out.method = DpdMethod::quadrature;
  }
  if (!std::isfinite(out.value)) throw DomainError("divergence is not finite");
  if (out.value < -1e-12) {
    throw NumericalError("negative divergence " + std::to_string(out.value));
  }
  return out;
}

double objective_h(const InhModel& model, const ObservationSet& data, const ParamPoint& theta,
                   double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  const Index n = model.size();
  if (data.size() != n) throw UsageError("data length does not match the model");
  model.check_parameter(theta);
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double ld = model.log_density(i, data.y(i), theta);
    if (!std::isfinite(ld)) {
      throw NumericalError("non-finite density at observation " + std::to_string(i));
    }
    if (tau == 0.0) {
      total -= ld;
    } else {
      total += model.power_mass(i, theta, tau) - (1.0 + 1.0 / tau) * std::exp(tau * ld);
    }
  }
  return total / static_cast<double>(n);
}

Vector objective_h_gradient(const InhModel& model, const ObservationSet& data,
                            const ParamPoint& theta, double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  const Index n = model.size();
  if (data.size() != n) throw UsageError("data length does not match the model");
  model.check_parameter(theta);
  Vector grad = Vector::Zero(model.dim());
  for (Index i = 0; i < n; ++i) {
    const double y = data.y(i);
    const Vector u = model.score(i, y, theta);
    if (tau == 0.0) {
      grad -= u;
      continue;
    }
    const double ld = model.log_density(i, y, theta);
    if (!std::isfinite(ld)) {
      throw NumericalError("non-finite density at observation " + std::to_string(i));
    }
    grad += (1.0 + tau) * (model.power_first(i, theta, tau) - std::exp(tau * ld) * u);
  }
  return grad / static_cast<double>(n);
}

DerivBlocks deriv_blocks(const InhModel& model, Index i, const ParamPoint& theta1,
                         const ParamPoint& theta2, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  if (auto exact = model.deriv_blocks_closed_form(i, theta1, theta2, gamma)) return *exact;
  return deriv_blocks_numeric(model, i, theta1, theta2, gamma);
}

DerivBlocks deriv_blocks_numeric(const InhModel& model, Index i, const ParamPoint& theta1,
                                 const ParamPoint& theta2, double gamma) {
  if (!(gamma >= 0.0)) throw DomainError("gamma must be >= 0");
  const Index p = model.dim();
  if (theta1.dim() != p || theta2.dim() != p) throw UsageError("parameter dimension mismatch");

  // Joint coordinates z = (theta1, theta2).
  Vector z(2 * p);
  z << theta1.theta(), theta2.theta();
  auto eval = [&](const Vector& at) {
    return dpd(model, i, ParamPoint(at.head(p)), ParamPoint(at.tail(p)), gamma).value;
  };

  Vector h1(2 * p);
  Vector h2(2 * p);
  for (Index k = 0; k < 2 * p; ++k) {
    h1(k) = step_for(z(k), 1e-5);
    h2(k) = step_for(z(k), 1e-4);
    if (!(z(k) + h1(k) != z(k))) throw NumericalError("finite-difference step underflow");
  }

  Vector grad(2 * p);
  for (Index k = 0; k < 2 * p; ++k) {
    Vector up = z;
    Vector dn = z;
    up(k) += h1(k);
    dn(k) -= h1(k);
    grad(k) = (eval(up) - eval(dn)) / (2.0 * h1(k));
  }

  const double f0 = eval(z);
  Matrix hess(2 * p, 2 * p);
  for (Index a = 0; a < 2 * p; ++a) {
    Vector up = z;
    Vector dn = z;
    up(a) += h2(a);
    dn(a) -= h2(a);
    hess(a, a) = (eval(up) - 2.0 * f0 + eval(dn)) / (h2(a) * h2(a));
    for (Index b = 0; b < a; ++b) {
      Vector pp = z, pm = z, mp = z, mm = z;
      pp(a) += h2(a); pp(b) += h2(b);
      pm(a) += h2(a); pm(b) -= h2(b);
      mp(a) -= h2(a); mp(b) += h2(b);
      mm(a) -= h2(a); mm(b) -= h2(b);
      const double v = (eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * h2(a) * h2(b));
      hess(a, b) = v;
      hess(b, a) = v;
    }
  }
  if (!grad.allFinite() || !hess.allFinite()) {
    throw NumericalError("non-finite finite-difference derivatives");
  }

  DerivBlocks out;
  out.m1 = grad.head(p);
  out.m2 = grad.tail(p);
  out.a11 = hess.topLeftCorner(p, p);
  out.a12 = hess.topRightCorner(p, p);
  out.a21 = hess.bottomLeftCorner(p, p);
  out.a22 = hess.bottomRightCorner(p, p);
  return out;
}

}  // namespace dpdtest
