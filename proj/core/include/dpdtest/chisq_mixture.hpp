#pragma once

#include "dpdtest/types.hpp"

#include <vector>

namespace dpdtest {

/// The law of sum_j weights_j * chi^2_1(ncp_j), independent components.
struct ChiSqMixture {
  Vector weights;
  Vector ncp;

  /// Validates weights > 0, ncp >= 0, matching lengths, r >= 1.
  ChiSqMixture(Vector weights, Vector ncp);
  /// Central mixture.
  explicit ChiSqMixture(Vector weights);

  Index r() const { return weights.size(); }
  double min_weight() const { return weights.minCoeff(); }
  double max_weight() const { return weights.maxCoeff(); }
  double total_ncp() const { return ncp.sum(); }
  /// True when all weights agree to 1e-12 relative, i.e. a scaled chi-square.
  bool equal_weights() const;
  ChiSqMixture scaled(double c) const;
};

/// P(Q > x). Scaled (noncentral) chi-square laws are evaluated directly;
/// everything else by characteristic-function inversion.
double mixture_survival(const ChiSqMixture& mix, double x);

/// P(Q > x) by numerical inversion of the characteristic function, whatever
/// the weights. Throws NumericalError when the oscillatory quadrature does not
/// reach 1e-9.
double cf_inversion_survival(const ChiSqMixture& mix, double x);

/// Smallest s with P(Q > s) = alpha.
double mixture_quantile(const ChiSqMixture& mix, double alpha);

/// Coefficients of the expansion
///   P(Q > x) = sum_v c[v] * P(chi^2_{r+2v} > x / zeta_min).
struct SeriesCoefficients {
  std::vector<double> c;
  double zeta_min = 0.0;
  Index r = 0;
  Index truncation_v = 0;
  double tail_bound = 0.0;  // 1 - sum(c)
  /// Set when the weights spread more than 1e6 or the tail did not reach 1e-10.
  bool slow_convergence = false;
};

SeriesCoefficients series_coefficients(const ChiSqMixture& mix);

/// sum_v c[v] * P(chi^2_{r+2v} > x / zeta_min).
double series_survival(const SeriesCoefficients& coef, double x);

/// P(Q > s_alpha) from the series.
double series_power(const ChiSqMixture& mix, double s_alpha);

}  // namespace dpdtest
