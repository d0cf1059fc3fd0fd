#include "dpdtest/chisq_mixture.hpp"

#include "dpdtest/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <string>

namespace dpdtest {
namespace {

constexpr double kSeriesTail = 1e-10;
constexpr Index kMaxSeriesTerms = 200000;

double scaled_chisq_survival(const ChiSqMixture& mix, double x) {
  const double z = mix.weights(0);
  const double df = static_cast<double>(mix.r());
  const double lambda = mix.total_ncp();
  if (lambda == 0.0) {
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x / z));
  }
  return boost::math::cdf(
      boost::math::complement(boost::math::non_central_chi_squared(df, lambda), x / z));
}

double scaled_chisq_quantile(const ChiSqMixture& mix, double alpha) {
  const double z = mix.weights(0);
  const double df = static_cast<double>(mix.r());
  const double lambda = mix.total_ncp();
  if (lambda == 0.0) {
    return z * boost::math::quantile(
                   boost::math::complement(boost::math::chi_squared(df), alpha));
  }
  return z * boost::math::quantile(
                 boost::math::complement(boost::math::non_central_chi_squared(df, lambda), alpha));
}

}  // namespace

ChiSqMixture::ChiSqMixture(Vector w, Vector d) : weights(std::move(w)), ncp(std::move(d)) {
  if (weights.size() < 1) throw DomainError("mixture needs at least one component");
  if (weights.size() != ncp.size()) throw UsageError("weights and ncp lengths differ");
  for (Index j = 0; j < weights.size(); ++j) {
    if (!(weights(j) > 0.0) || !std::isfinite(weights(j))) {
      throw DomainError("mixture weights must be positive and finite");
    }
    if (!(ncp(j) >= 0.0) || !std::isfinite(ncp(j))) {
      throw DomainError("noncentralities must be nonnegative and finite");
    }
  }
}

ChiSqMixture::ChiSqMixture(Vector w) : ChiSqMixture(w, Vector::Zero(w.size())) {}

bool ChiSqMixture::equal_weights() const {
  return max_weight() - min_weight() <= 1e-12 * max_weight();
}

ChiSqMixture ChiSqMixture::scaled(double c) const {
  if (!(c > 0.0)) throw DomainError("scale must be positive");
  return ChiSqMixture(c * weights, ncp);
}

double mixture_survival(const ChiSqMixture& mix, double x) {
  if (!(x >= 0.0)) throw DomainError("survival needs x >= 0");
  if (x == 0.0) return 1.0;
  if (mix.equal_weights()) return scaled_chisq_survival(mix, x);
  return cf_inversion_survival(mix, x);
}

double cf_inversion_survival(const ChiSqMixture& mix, double x) {
  if (!(x >= 0.0)) throw DomainError("survival needs x >= 0");
  if (x == 0.0) return 1.0;
  // Imhof's formula, P(Q > x) = 1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du,
  // theta(u) = phi(u) - x u / 2. Splitting sin(phi - w u) lets the oscillatory
  // factor be handled by double-exponential Fourier quadrature.
  const double scale = mix.max_weight();
  const Vector lam = mix.weights / scale;
  const Vector& d2 = mix.ncp;
  const double omega = 0.5 * x / scale;

  auto phi_rho = [&](double u, double& phi, double& log_rho) {
    phi = 0.0;
    log_rho = 0.0;
    for (Index j = 0; j < lam.size(); ++j) {
      const double lu = lam(j) * u;
      const double q = 1.0 + lu * lu;
      phi += 0.5 * (std::atan(lu) + d2(j) * lu / q);
      log_rho += 0.25 * std::log1p(lu * lu) + 0.5 * d2(j) * lu * lu / q;
    }
  };
  auto sin_part = [&](double u) {
    double phi = 0.0;
    double lr = 0.0;
    if (u < 1e-8) {
      double slope = 0.0;
      for (Index j = 0; j < lam.size(); ++j) slope += 0.5 * lam(j) * (1.0 + d2(j));
      return slope;
    }
    phi_rho(u, phi, lr);
    return std::sin(phi) * std::exp(-lr) / u;
  };
  auto cos_part = [&](double u) {
    double phi = 0.0;
    double lr = 0.0;
    phi_rho(u, phi, lr);
    return std::cos(phi) * std::exp(-lr) / u;
  };

  static thread_local boost::math::quadrature::ooura_fourier_cos<double> cos_rule(1e-12, 8);
  static thread_local boost::math::quadrature::ooura_fourier_sin<double> sin_rule(1e-12, 8);
  const auto [ic, ec] = cos_rule.integrate(sin_part, omega);
  const auto [is, es] = sin_rule.integrate(cos_part, omega);
  const double bound = (std::abs(ic) * ec + std::abs(is) * es) / std::numbers::pi;
  const double value = 0.5 + (ic - is) / std::numbers::pi;
  if (!std::isfinite(value) || bound > 1e-9) {
    throw NumericalError("characteristic-function inversion reached only " +
                         std::to_string(bound));
  }
  return std::clamp(value, 0.0, 1.0);
}

double mixture_quantile(const ChiSqMixture& mix, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (mix.equal_weights()) return scaled_chisq_quantile(mix, alpha);

  const double mean = (mix.weights.array() * (1.0 + mix.ncp.array())).sum();
  const double sd = std::sqrt(
      2.0 * (mix.weights.array().square() * (1.0 + 2.0 * mix.ncp.array())).sum());
  double hi = mean + 4.0 * sd;
  int guard = 0;
  while (mixture_survival(mix, hi) > alpha) {
    hi *= 2.0;
    if (++guard > 200) throw NumericalError("could not bracket the quantile");
  }
  auto f = [&](double s) { return mixture_survival(mix, s) - alpha; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, 0.0, hi, 1.0 - alpha, f(hi), boost::math::tools::eps_tolerance<double>(50), max_iter);
  return 0.5 * (a + b);
}

SeriesCoefficients series_coefficients(const ChiSqMixture& mix) {
  SeriesCoefficients out;
  out.r = mix.r();
  out.zeta_min = mix.min_weight();
  const double half_ncp = 0.5 * mix.total_ncp();
  if (half_ncp > 700.0) {
    throw NumericalError("noncentrality too large for the series (half total " +
                         std::to_string(half_ncp) + ")");
  }
  const Index r = mix.r();
  Vector a2(r);  // 1 - zeta_min / zeta_j, zero for the smallest weights
  Vector b2(r);  // ncp_j * zeta_min / zeta_j
  double log_c0 = -half_ncp;
  for (Index j = 0; j < r; ++j) {
    const double ratio = out.zeta_min / mix.weights(j);
    a2(j) = 1.0 - ratio;
    b2(j) = mix.ncp(j) * ratio;
    log_c0 += 0.5 * std::log(ratio);
  }
  out.slow_convergence = mix.max_weight() / mix.min_weight() > 1e6;

  // Generating-function recursion: c_v = (1/v) sum_{k<v} g_{v-k} c_k with
  // g_m = 1/2 sum_j [a_j^{2m} + m b_j^2 a_j^{2(m-1)}].
  std::vector<double> g{0.0};
  out.c.push_back(std::exp(log_c0));
  double total = out.c[0];
  Index v = 0;
  while (1.0 - total > kSeriesTail && v < kMaxSeriesTerms) {
    ++v;
    double gm = 0.0;
    for (Index j = 0; j < r; ++j) {
      const double m = static_cast<double>(v);
      gm += 0.5 * (std::pow(a2(j), m) + m * b2(j) * std::pow(a2(j), m - 1.0));
    }
    g.push_back(gm);
    double cv = 0.0;
    for (Index k = 0; k < v; ++k) cv += g[static_cast<std::size_t>(v - k)] * out.c[static_cast<std::size_t>(k)];
    cv /= static_cast<double>(v);
    out.c.push_back(cv);
    total += cv;
  }
  out.truncation_v = v;
  out.tail_bound = std::max(0.0, 1.0 - total);
  if (out.tail_bound > kSeriesTail) out.slow_convergence = true;
  return out;
}

double series_survival(const SeriesCoefficients& coef, double x) {
  if (!(x >= 0.0)) throw DomainError("survival needs x >= 0");
  if (x == 0.0) return 1.0;
  const double half_x = 0.5 * x / coef.zeta_min;
  double sum = 0.0;
  for (std::size_t v = 0; v < coef.c.size(); ++v) {
    if (coef.c[v] == 0.0) continue;
    const double shape = 0.5 * static_cast<double>(coef.r) + static_cast<double>(v);
    sum += coef.c[v] * boost::math::gamma_q(shape, half_x);
  }
  return std::clamp(sum, 0.0, 1.0);
}

double series_power(const ChiSqMixture& mix, double s_alpha) {
  if (!(s_alpha >= 0.0)) throw DomainError("critical value must be >= 0");
  return series_survival(series_coefficients(mix), s_alpha);
}

}  // namespace dpdtest
