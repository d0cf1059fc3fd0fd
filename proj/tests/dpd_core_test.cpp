#include "dpdtest/dpdtest.hpp"
#include "generic_normal.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dpdtest;

namespace {

Matrix design(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.5);
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) x.row(i) << 1.0, z(rng);
  return x;
}

ObservationSet data_for(const Matrix& x, const Vector& beta, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, sigma);
  Vector y = x * beta;
  for (Index i = 0; i < y.size(); ++i) y(i) += e(rng);
  return {y, x};
}

}  // namespace

TEST(Dpd, ClosedFormMatchesDefinition) {
  const Matrix x = design(3, 1);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  const ParamPoint b = ParamPoint::regression((Vector(2) << -0.4, 1.5).finished(), 0.9);
  for (double c : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    const DpdValue v = dpd(model, 1, a, b, c);
    EXPECT_EQ(v.method, DpdMethod::closed_form);
    const double ref = oracle::dpd_normal(model.mean(1, a), 1.3, model.mean(1, b), 0.9, c);
    EXPECT_NEAR(v.value, ref, 1e-10 * std::max(1.0, std::abs(ref))) << "c=" << c;
  }
}

TEST(Dpd, QuadratureMatchesClosedForm) {
  const Matrix x = design(3, 2);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  const ParamPoint b = ParamPoint::regression((Vector(2) << 1.4, 0.5).finished(), 2.1);
  for (double c : {0.0, 1e-6, 0.5, 1.0}) {
    const double closed = dpd(model, 0, a, b, c).value;
    const DpdValue quad = dpd(model, 0, a, b, c, true);
    EXPECT_EQ(quad.method, DpdMethod::quadrature);
    EXPECT_NEAR(quad.value, closed, 1e-9) << "c=" << c;
  }
}

TEST(Dpd, NonNegativeAndZeroOnlyAtEquality) {
  const Matrix x = design(2, 3);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    const ParamPoint b = ParamPoint::regression((Vector(2) << z(rng), z(rng)).finished(),
                                                std::exp(0.5 * z(rng)));
    for (double c : {0.0, 0.5, 1.0}) EXPECT_GE(dpd(model, 0, a, b, c).value, 0.0);
  }
  for (double c : {0.0, 0.5, 1.0}) EXPECT_NEAR(dpd(model, 1, a, a, c).value, 0.0, 1e-14);
}

TEST(Dpd, ContinuousAtZeroTuning) {
  const Matrix x = design(2, 4);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  const ParamPoint b = ParamPoint::regression((Vector(2) << 0.9, 0.1).finished(), 0.7);
  const double kl = dpd(model, 0, a, b, 0.0).value;
  EXPECT_NEAR(dpd(model, 0, a, b, 1e-7).value, kl, 1e-6);
  EXPECT_NEAR(dpd(model, 0, a, b, 1e-7, true).value, kl, 1e-6);
}

TEST(Dpd, RejectsNegativeTuning) {
  const NormalLinearModel model(design(2, 5));
  const ParamPoint a = ParamPoint::regression(Vector::Zero(2), 1.0);
  EXPECT_THROW(dpd(model, 0, a, a, -0.1), DomainError);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  const Matrix x = design(20, 6);
  const NormalLinearModel model(x);
  const ObservationSet data = data_for(x, (Vector(2) << 1.0, -2.0).finished(), 1.2, 7);
  const ParamPoint theta = ParamPoint::regression((Vector(2) << 0.8, -1.7).finished(), 1.5);
  for (double tau : {0.0, 0.5, 1.0}) {
    const Vector g = objective_h_gradient(model, data, theta, tau);
    for (Index k = 0; k < 3; ++k) {
      ParamPoint up = theta, dn = theta;
      up.theta()(k) += 1e-6;
      dn.theta()(k) -= 1e-6;
      const double fd = (objective_h(model, data, up, tau) - objective_h(model, data, dn, tau)) / 2e-6;
      EXPECT_NEAR(g(k), fd, 1e-7) << "tau=" << tau << " k=" << k;
    }
  }
}

TEST(Objective, ZeroTuningIsMeanNegativeLogLikelihood) {
  const Matrix x = design(10, 8);
  const NormalLinearModel model(x);
  const ObservationSet data = data_for(x, (Vector(2) << 1.0, -2.0).finished(), 1.2, 9);
  const ParamPoint theta = ParamPoint::regression((Vector(2) << 0.8, -1.7).finished(), 1.5);
  double nll = 0.0;
  for (Index i = 0; i < 10; ++i) {
    nll -= std::log(oracle::normal_pdf(data.y(i), x.row(i).dot(theta.beta()), 1.5));
  }
  EXPECT_NEAR(objective_h(model, data, theta, 0.0), nll / 10, 1e-12);
}

TEST(Objective, GenericPathMatchesClosedForm) {
  const Matrix x = design(8, 10);
  const NormalLinearModel closed(x);
  const GenericNormal generic(x);
  const ObservationSet data = data_for(x, (Vector(2) << 1.0, -2.0).finished(), 1.2, 11);
  const ParamPoint theta = ParamPoint::regression((Vector(2) << 0.8, -1.7).finished(), 1.5);
  for (double tau : {0.0, 0.5}) {
    EXPECT_NEAR(objective_h(closed, data, theta, tau), objective_h(generic, data, theta, tau), 1e-9);
    EXPECT_LT((objective_h_gradient(closed, data, theta, tau) -
               objective_h_gradient(generic, data, theta, tau))
                  .lpNorm<Eigen::Infinity>(),
              1e-8);
  }
}

TEST(DerivBlocks, ExactBlocksMatchFiniteDifferences) {
  const Matrix x = design(3, 12);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  const ParamPoint b = ParamPoint::regression((Vector(2) << 0.5, 0.8).finished(), 1.1);
  for (double gamma : {0.0, 0.5, 1.0}) {
    const DerivBlocks e = deriv_blocks(model, 2, a, b, gamma);
    const DerivBlocks n = deriv_blocks_numeric(model, 2, a, b, gamma);
    EXPECT_LT((e.m1 - n.m1).lpNorm<Eigen::Infinity>(), 1e-7);
    EXPECT_LT((e.m2 - n.m2).lpNorm<Eigen::Infinity>(), 1e-7);
    EXPECT_LT((e.a11 - n.a11).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_LT((e.a12 - n.a12).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_LT((e.a22 - n.a22).lpNorm<Eigen::Infinity>(), 1e-5);
    EXPECT_LT((e.a21 - e.a12.transpose()).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(DerivBlocks, VanishAtEqualArguments) {
  const Matrix x = design(3, 13);
  const NormalLinearModel model(x);
  const ParamPoint a = ParamPoint::regression((Vector(2) << 0.2, 1.0).finished(), 1.3);
  const DerivBlocks e = deriv_blocks(model, 0, a, a, 0.5);
  EXPECT_LT(e.m1.lpNorm<Eigen::Infinity>(), 1e-13);
  EXPECT_LT(e.m2.lpNorm<Eigen::Infinity>(), 1e-13);
  EXPECT_LT((e.a11 + e.a12).lpNorm<Eigen::Infinity>(), 1e-12);
}
