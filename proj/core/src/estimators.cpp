#include "dpdtest/estimators.hpp"

#include "dpdtest/dpd.hpp"
#include "dpdtest/errors.hpp"
#include "dpdtest/optimize.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace dpdtest {
namespace {

// Free coordinates w for the optimiser. The leading block of theta (the
// coefficients a linear restriction acts on) is particular + basis * z; the
// remaining coordinates are taken as-is or on the log scale.
class Chart {
 public:
  Chart(const InhModel& model, const Restriction* linear) : dim_(model.dim()) {
    mask_ = model.log_scale_mask();
    if (linear != nullptr) {
      particular_ = linear->particular();
      basis_ = linear->null_basis();
      lead_ = particular_.size();
      for (Index k = 0; k < lead_; ++k) {
        if (mask_[static_cast<std::size_t>(k)]) {
          throw UsageError("linear restrictions may not act on log-scale coordinates");
        }
      }
    }
  }

  Index free_dim() const { return basis_.cols() + (dim_ - lead_); }

  ParamPoint to_theta(const Vector& w) const {
    Vector theta(dim_);
    const Index nz = basis_.cols();
    if (lead_ > 0) theta.head(lead_) = particular_ + basis_ * w.head(nz);
    for (Index k = lead_; k < dim_; ++k) {
      const double v = w(nz + k - lead_);
      theta(k) = mask_[static_cast<std::size_t>(k)] ? std::exp(v) : v;
    }
    return ParamPoint(theta);
  }

  Vector from_theta(const ParamPoint& p) const {
    Vector w(free_dim());
    const Index nz = basis_.cols();
    if (lead_ > 0) w.head(nz) = basis_.transpose() * (p.theta().head(lead_) - particular_);
    for (Index k = lead_; k < dim_; ++k) {
      const double v = p.theta()(k);
      w(nz + k - lead_) = mask_[static_cast<std::size_t>(k)] ? std::log(std::max(v, 1e-300)) : v;
    }
    return w;
  }

  Vector pull_gradient(const Vector& w, const Vector& g) const {
    Vector out(free_dim());
    const Index nz = basis_.cols();
    if (lead_ > 0) out.head(nz) = basis_.transpose() * g.head(lead_);
    for (Index k = lead_; k < dim_; ++k) {
      const Index j = nz + k - lead_;
      out(j) = mask_[static_cast<std::size_t>(k)] ? g(k) * std::exp(w(j)) : g(k);
    }
    return out;
  }

  const std::vector<bool>& mask() const { return mask_; }

 private:
  Index dim_;
  Index lead_ = 0;
  Vector particular_;
  Matrix basis_;
  std::vector<bool> mask_;
};

struct Candidate {
  ParamPoint theta;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool ok = false;
  bool at_boundary = false;
};

bool relatively_small(double g, double f, double tol) {
  return g <= tol * std::max(1.0, std::abs(f));
}

std::vector<ParamPoint> starting_points(const InhModel& model, const ObservationSet& data,
                                        const std::optional<ParamPoint>& init) {
  if (init) {
    model.check_parameter(*init);
    return {*init};
  }
  return model.initial_points(data);
}

bool collapsed(const Chart& chart, const ParamPoint& theta, const ParamPoint& start) {
  for (std::size_t k = 0; k < chart.mask().size(); ++k) {
    if (!chart.mask()[k]) continue;
    const Index j = static_cast<Index>(k);
    if (theta.theta()(j) < 1e-8 * std::abs(start.theta()(j))) return true;
  }
  return false;
}

FitResult finish(const InhModel& model, const ObservationSet& data, double tau,
                 const Restriction* restriction, const std::vector<Candidate>& candidates,
                 const FitOptions& options) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (c.at_boundary || !std::isfinite(c.value)) continue;
    if (best == nullptr || (c.ok && !best->ok) || (c.ok == best->ok && c.value < best->value)) {
      best = &c;
    }
  }
  if (best == nullptr) {
    for (const auto& c : candidates) {
      if (c.at_boundary) throw BoundaryError("scale parameter collapsed to zero in every start");
    }
    throw NumericalError("no starting point produced a finite objective");
  }

  FitResult out;
  out.theta_hat = best->theta;
  out.theta_hat.set_restricted(restriction != nullptr);
  out.restricted = restriction != nullptr;
  out.objective_value = best->value;
  out.iterations = best->iterations;
  out.gradient_norm =
      projected_gradient(model, data, out.theta_hat, tau, restriction).cwiseAbs().maxCoeff();
  out.converged =
      relatively_small(out.gradient_norm, out.objective_value, options.gradient_tolerance);
  if (restriction != nullptr) {
    const double violation = restriction->upsilon(out.theta_hat).cwiseAbs().maxCoeff();
    if (violation > options.constraint_tolerance) {
      out.converged = false;
      out.diagnostics = "constraint violation " + std::to_string(violation);
    }
  }
  if (!out.converged && out.diagnostics.empty()) {
    out.diagnostics = "gradient norm " + std::to_string(out.gradient_norm) + " after " +
                      std::to_string(out.iterations) + " iterations";
  }
  try {
    const Restriction* linear =
        restriction != nullptr && restriction->is_linear() ? restriction : nullptr;
    if (restriction == nullptr || linear != nullptr) {
      out.asymp_cov = model.asymptotic_covariance(out.theta_hat, tau, linear);
    }
  } catch (const Error&) {
    out.asymp_cov.reset();
  }
  return out;
}

Candidate run_chart(const InhModel& model, const ObservationSet& data, double tau,
                    const Chart& chart, const ParamPoint& start, const FitOptions& options) {
  auto f = [&](const Vector& w) { return objective_h(model, data, chart.to_theta(w), tau); };
  auto g = [&](const Vector& w) {
    return chart.pull_gradient(w, objective_h_gradient(model, data, chart.to_theta(w), tau));
  };
  Candidate c;
  try {
    MinimizeOptions mo;
    mo.max_iterations = options.max_iterations;
    mo.gradient_tolerance = options.gradient_tolerance;
    const MinimizeResult r = minimize(f, g, chart.from_theta(start), mo);
    c.theta = chart.to_theta(r.x);
    c.value = r.value;
    c.iterations = r.iterations;
    c.ok = r.converged;
    c.at_boundary = collapsed(chart, c.theta, start);
  } catch (const Error&) {
    c.ok = false;
  }
  return c;
}

// Closest point of the null set to `p` along the leading coordinates.
ParamPoint project_linear(const Restriction& restriction, const ParamPoint& p) {
  const Index q = restriction.particular().size();
  Vector theta = p.theta();
  const Matrix& n = restriction.null_basis();
  const Vector& b0 = restriction.particular();
  theta.head(q) = b0 + n * (n.transpose() * (theta.head(q) - b0));
  return ParamPoint(theta);
}

Candidate run_augmented_lagrangian(const InhModel& model, const ObservationSet& data, double tau,
                                   const Restriction& restriction, const Chart& chart,
                                   const ParamPoint& start, const FitOptions& options) {
  Vector lambda = Vector::Zero(restriction.r());
  double mu = 10.0;
  double prev_violation = std::numeric_limits<double>::infinity();
  Vector w = chart.from_theta(start);
  Candidate c;
  int total_iter = 0;
  for (int outer = 0; outer < 60; ++outer) {
    auto f = [&](const Vector& v) {
      const ParamPoint th = chart.to_theta(v);
      const Vector u = restriction.upsilon(th);
      return objective_h(model, data, th, tau) + lambda.dot(u) + 0.5 * mu * u.squaredNorm();
    };
    auto g = [&](const Vector& v) {
      const ParamPoint th = chart.to_theta(v);
      const Vector u = restriction.upsilon(th);
      const Vector gt = objective_h_gradient(model, data, th, tau) +
                        restriction.jacobian(th) * (lambda + mu * u);
      return chart.pull_gradient(v, gt);
    };
    MinimizeOptions mo;
    mo.max_iterations = options.max_iterations;
    mo.gradient_tolerance = options.gradient_tolerance;
    MinimizeResult r;
    try {
      r = minimize(f, g, w, mo);
    } catch (const Error&) {
      return c;
    }
    total_iter += r.iterations;
    w = r.x;
    const ParamPoint th = chart.to_theta(w);
    const Vector u = restriction.upsilon(th);
    const double violation = u.cwiseAbs().maxCoeff();
    c.theta = th;
    c.value = objective_h(model, data, th, tau);
    c.iterations = total_iter;
    c.at_boundary = collapsed(chart, th, start);
    const double pg = projected_gradient(model, data, th, tau, &restriction).cwiseAbs().maxCoeff();
    if (violation <= options.constraint_tolerance &&
        relatively_small(pg, c.value, options.gradient_tolerance)) {
      c.ok = true;
      return c;
    }
    lambda += mu * u;
    if (violation > 0.25 * prev_violation) mu = std::min(mu * 10.0, 1e12);
    prev_violation = violation;
  }
  return c;
}

}  // namespace

Vector projected_gradient(const InhModel& model, const ObservationSet& data,
                          const ParamPoint& theta, double tau, const Restriction* restriction) {
  const Vector g = objective_h_gradient(model, data, theta, tau);
  if (restriction == nullptr) return g;
  const Matrix j = restriction->jacobian(theta);
  const Vector coef = (j.transpose() * j).ldlt().solve(j.transpose() * g);
  return g - j * coef;
}

FitResult mdpde_fit(const InhModel& model, const ObservationSet& data, double tau,
                    const std::optional<ParamPoint>& init, const FitOptions& options) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (data.size() != model.size()) throw UsageError("data length does not match the model");
  const Chart chart(model, nullptr);
  std::vector<Candidate> candidates;
  for (const auto& start : starting_points(model, data, init)) {
    candidates.push_back(run_chart(model, data, tau, chart, start, options));
  }
  return finish(model, data, tau, nullptr, candidates, options);
}

FitResult rmdpde_fit(const InhModel& model, const ObservationSet& data, double tau,
                     const Restriction& restriction, const std::optional<ParamPoint>& init,
                     const FitOptions& options) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (data.size() != model.size()) throw UsageError("data length does not match the model");
  std::vector<Candidate> candidates;
  if (restriction.is_linear()) {
    if (restriction.l().rows() > model.dim()) {
      throw FeasibilityError("restriction has more coefficients than the model");
    }
    const Chart chart(model, &restriction);
    for (const auto& start : starting_points(model, data, init)) {
      candidates.push_back(
          run_chart(model, data, tau, chart, project_linear(restriction, start), options));
    }
  } else {
    const Chart chart(model, nullptr);
    for (const auto& start : starting_points(model, data, init)) {
      candidates.push_back(
          run_augmented_lagrangian(model, data, tau, restriction, chart, start, options));
    }
    double best_violation = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      if (std::isfinite(c.value)) {
        best_violation =
            std::min(best_violation, restriction.upsilon(c.theta).cwiseAbs().maxCoeff());
      }
    }
    if (best_violation > 1e-6) {
      throw FeasibilityError("could not satisfy the restriction (violation " +
                             std::to_string(best_violation) + ")");
    }
  }
  return finish(model, data, tau, &restriction, candidates, options);
}

AsympVariances lrm_asymp_variances(double tau, double sigma0) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (!(sigma0 > 0.0)) throw DomainError("sigma0 must be positive");
  const double s2 = sigma0 * sigma0;
  const double base = 1.0 + tau * tau / (1.0 + 2.0 * tau);
  const double v_beta = s2 * std::pow(base, 1.5);
  const double lead = 4.0 * s2 * s2 / ((2.0 + tau * tau) * (2.0 + tau * tau));
  const double v_e = lead * (2.0 * (1.0 + 2.0 * tau * tau) * std::pow(base, 2.5) -
                             tau * tau * (1.0 + tau) * (1.0 + tau));
  return {v_beta, v_e};
}

Matrix restricted_projection(const Matrix& x, const Matrix& l) {
  const Index p = x.cols();
  if (l.rows() != p) throw UsageError("L must have one row per coefficient");
  const Matrix gram = x.transpose() * x;
  if (numerical_rank(gram) != p) throw RankError("X^T X is singular");
  const Matrix gram_inv = gram.ldlt().solve(Matrix::Identity(p, p));
  const Matrix middle = l.transpose() * gram_inv * l;
  if (numerical_rank(middle) != l.cols()) throw RankError("L^T (X^T X)^{-1} L is singular");
  return Matrix::Identity(p, p) - l * middle.ldlt().solve(l.transpose() * gram_inv);
}

Matrix leading_schur_complement(const Matrix& gram, Index r) {
  const Index p = gram.rows();
  if (r < 1 || r > p) throw UsageError("block size out of range");
  if (r == p) return gram;
  const Matrix g22 = gram.bottomRightCorner(p - r, p - r);
  return gram.topLeftCorner(r, r) -
         gram.topRightCorner(r, p - r) * g22.ldlt().solve(gram.bottomLeftCorner(p - r, r));
}

Matrix trailing_schur_complement(const Matrix& gram, Index r) {
  const Index p = gram.rows();
  if (r < 0 || r >= p) throw UsageError("block size out of range");
  if (r == 0) return gram;
  const Matrix g11 = gram.topLeftCorner(r, r);
  return gram.bottomRightCorner(p - r, p - r) -
         gram.bottomLeftCorner(p - r, r) * g11.ldlt().solve(gram.topRightCorner(r, p - r));
}

}  // namespace dpdtest
