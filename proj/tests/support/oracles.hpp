#pragma once

// Reference computations that share no code with the library: plain
// quadrature, brute-force search, Monte Carlo and Newton solves of the
// contaminated estimating equations.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson on [a, b], split into `pieces` panels first.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-13, int pieces = 64) {
  double total = 0.0;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * h;
    const double hi = lo + h;
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    total += simpson_step(f, lo, hi, fa, fm, fb, h / 6.0 * (fa + 4.0 * fm + fb), tol / pieces, 40);
  }
  return total;
}

inline double normal_pdf(double y, double mu, double s) {
  const double z = (y - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

/// d_c(g, f) = int f^{1+c} - (1 + 1/c) f^c g + g^{1+c} / c, KL at c = 0,
/// straight from the definition.
inline double dpd_normal(double mu_g, double s_g, double mu_f, double s_f, double c) {
  const double lo = std::min(mu_g - 14 * s_g, mu_f - 14 * s_f);
  const double hi = std::max(mu_g + 14 * s_g, mu_f + 14 * s_f);
  return simpson(
      [&](double y) {
        const double g = normal_pdf(y, mu_g, s_g);
        const double f = normal_pdf(y, mu_f, s_f);
        if (g <= 0.0) return c == 0.0 ? 0.0 : std::pow(f, 1 + c);
        if (c == 0.0) return g * (std::log(g) - std::log(f));
        return std::pow(f, 1 + c) - (1 + 1 / c) * std::pow(f, c) * g + std::pow(g, 1 + c) / c;
      },
      lo, hi);
}

/// Minimises f over a box by repeated dense grids, each zoomed around the
/// previous best point.
inline std::pair<double, double> grid_minimize_2d(const std::function<double(double, double)>& f,
                                                  double lo_a, double hi_a, double lo_b,
                                                  double hi_b, int levels = 6, int m = 200) {
  double best_a = lo_a, best_b = lo_b, best = INFINITY;
  for (int level = 0; level < levels; ++level) {
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m; ++j) {
        const double a = lo_a + (hi_a - lo_a) * i / m;
        const double b = lo_b + (hi_b - lo_b) * j / m;
        const double v = f(a, b);
        if (v < best) best = v, best_a = a, best_b = b;
      }
    }
    const double wa = (hi_a - lo_a) / 20, wb = (hi_b - lo_b) / 20;
    lo_a = best_a - wa, hi_a = best_a + wa;
    lo_b = std::max(1e-3, best_b - wb), hi_b = best_b + wb;
  }
  return {best_a, best_b};
}

/// Ordinary least squares through a QR solve.
inline Vec ols(const Mat& x, const Vec& y) { return x.colPivHouseholderQr().solve(y); }

/// Classical likelihood-ratio statistic n log(RSS0 / RSS1) for beta = beta0.
inline double lrt_full_beta(const Mat& x, const Vec& y, const Vec& beta0) {
  const double rss1 = (y - x * ols(x, y)).squaredNorm();
  const double rss0 = (y - x * beta0).squaredNorm();
  return static_cast<double>(y.size()) * std::log(rss0 / rss1);
}

/// Newton's method with a central-difference Jacobian.
inline Vec newton_solve(const std::function<Vec(const Vec&)>& g, Vec x, double tol = 1e-13,
                        int max_iter = 100) {
  for (int it = 0; it < max_iter; ++it) {
    const Vec gx = g(x);
    if (gx.lpNorm<Eigen::Infinity>() < tol) break;
    Mat jac(gx.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(k)));
      Vec xp = x;
      Vec xm = x;
      xp(k) += h;
      xm(k) -= h;
      jac.col(k) = (g(xp) - g(xm)) / (2 * h);
    }
    x -= jac.fullPivLu().solve(gx);
  }
  return x;
}

/// Estimating function of the MDPDE for normal regression when observation
/// i follows (1 - eps) N(x_i^T beta0, sigma0^2) + eps delta_{t_i}. The model
/// expectations are done by adaptive Simpson.
struct ContaminatedRegression {
  Mat x;
  Vec beta0;
  double sigma0;
  Vec t;
  double tau;

  Vec equations(const Vec& theta, double eps) const {
    const Eigen::Index p = x.cols();
    const Vec beta = theta.head(p);
    const double s = theta(p);
    Vec out = Vec::Zero(p + 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double mu = x.row(i).dot(beta);
      const double mu0 = x.row(i).dot(beta0);
      auto score = [&](double y) {
        const double r = (y - mu) / s;
        return std::pair{r / s, (r * r - 1.0) / s};
      };
      const double lo = std::min(mu, mu0) - 14 * std::max(s, sigma0);
      const double hi = std::max(mu, mu0) + 14 * std::max(s, sigma0);
      for (int part = 0; part < 2; ++part) {
        auto pick = [&](double y) {
          const auto [ub, us] = score(y);
          return part == 0 ? ub : us;
        };
        const double model_term = simpson(
            [&](double y) { return pick(y) * std::pow(normal_pdf(y, mu, s), 1 + tau); }, lo, hi);
        const double data_term = simpson(
            [&](double y) {
              return pick(y) * std::pow(normal_pdf(y, mu, s), tau) * normal_pdf(y, mu0, sigma0);
            },
            lo, hi);
        const double point = pick(t(i)) * std::pow(normal_pdf(t(i), mu, s), tau);
        const double value = model_term - (1 - eps) * data_term - eps * point;
        if (part == 0) {
          out.head(p) += value * x.row(i).transpose();
        } else {
          out(p) += value;
        }
      }
    }
    return out;
  }

  /// Functional at eps; restricted to beta = particular + basis z if basis given.
  Vec functional(double eps, const Mat* basis = nullptr, const Vec* particular = nullptr) const {
    const Eigen::Index p = x.cols();
    Vec start(p + 1);
    start << beta0, sigma0;
    if (basis == nullptr) {
      return newton_solve([&](const Vec& th) { return equations(th, eps); }, start);
    }
    const Eigen::Index k = basis->cols();
    auto expand = [&](const Vec& z) {
      Vec th(p + 1);
      th.head(p) = *particular + *basis * z.head(k);
      th(p) = z(k);
      return th;
    };
    Vec z0(k + 1);
    z0.head(k) = basis->transpose() * (beta0 - *particular);
    z0(k) = sigma0;
    const Vec z = newton_solve(
        [&](const Vec& zz) {
          const Vec e = equations(expand(zz), eps);
          Vec red(k + 1);
          red.head(k) = basis->transpose() * e.head(p);
          red(k) = e(p);
          return red;
        },
        z0);
    return expand(z);
  }

  /// Gateaux derivative at eps = 0 by a central difference in eps.
  Vec gateaux(double h = 1e-5, const Mat* basis = nullptr, const Vec* particular = nullptr) const {
    return (functional(h, basis, particular) - functional(-h, basis, particular)) / (2 * h);
  }
};

/// Monte Carlo survival of sum w_j (Z_j + sqrt(ncp_j))^2.
struct McSurvival {
  double estimate;
  double stderr_;
};

inline McSurvival mc_mixture_survival(const Vec& w, const Vec& ncp, double x, long draws,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  long hits = 0;
  for (long k = 0; k < draws; ++k) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
      const double v = z(rng) + std::sqrt(ncp(j));
      q += w(j) * v * v;
    }
    if (q > x) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  return {p, std::sqrt(p * (1 - p) / static_cast<double>(draws))};
}

}  // namespace oracle
