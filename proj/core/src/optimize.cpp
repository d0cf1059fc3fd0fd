#include "dpdtest/optimize.hpp"

#include "dpdtest/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace dpdtest {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const std::function<double(const Vector&)>& f, const Vector& x) {
  try {
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  } catch (const Error&) {
    return kInf;
  }
}

bool small_gradient(const Vector& g, double f, double tol) {
  return g.size() == 0 || g.cwiseAbs().maxCoeff() <= tol * std::max(1.0, std::abs(f));
}

// Hessian of f from central differences of its gradient, symmetrised.
Matrix fd_hessian(const std::function<Vector(const Vector&)>& gradient, const Vector& x) {
  const Index d = x.size();
  Matrix h(d, d);
  for (Index k = 0; k < d; ++k) {
    const double step = 1e-6 * std::max(1.0, std::abs(x(k)));
    Vector up = x;
    Vector dn = x;
    up(k) += step;
    dn(k) -= step;
    h.col(k) = (gradient(up) - gradient(dn)) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

MinimizeResult minimize(const std::function<double(const Vector&)>& objective,
                        const std::function<Vector(const Vector&)>& gradient, Vector x0,
                        const MinimizeOptions& options) {
  const Index d = x0.size();
  MinimizeResult out;
  out.x = std::move(x0);
  out.value = objective(out.x);
  if (!std::isfinite(out.value)) throw NumericalError("objective is not finite at the start");
  out.gradient = gradient(out.x);
  if (d == 0) {
    out.converged = true;
    return out;
  }

  Matrix inv_h = Matrix::Identity(d, d);
  bool scaled = false;
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (small_gradient(out.gradient, out.value, options.gradient_tolerance)) break;
    Vector dir = -inv_h * out.gradient;
    double slope = dir.dot(out.gradient);
    if (!(slope < 0.0)) {
      inv_h.setIdentity();
      dir = -out.gradient;
      slope = dir.dot(out.gradient);
    }

    double step = 1.0;
    double trial_value = kInf;
    Vector trial;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      trial = out.x + step * dir;
      trial_value = safe_eval(objective, trial);
      if (trial_value <= out.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vector trial_grad = gradient(trial);
    const Vector s = trial - out.x;
    const Vector y = trial_grad - out.gradient;
    const double sy = s.dot(y);
    out.x = trial;
    out.value = trial_value;
    out.gradient = trial_grad;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        inv_h *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix left = Matrix::Identity(d, d) - rho * s * y.transpose();
      inv_h = left * inv_h * left.transpose() + rho * s * s.transpose();
    }
  }
  out.iterations = iter;

  // Newton polish: BFGS stalls near 1e-8 on flat objectives.
  for (int k = 0; k < options.newton_polish_steps; ++k) {
    if (small_gradient(out.gradient, out.value, 1e-3 * options.gradient_tolerance)) break;
    Matrix hess;
    try {
      hess = fd_hessian(gradient, out.x);
    } catch (const Error&) {
      break;
    }
    if (!hess.allFinite()) break;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(hess);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) break;
    const Vector dir = -eig.eigenvectors() *
                       (eig.eigenvectors().transpose() * out.gradient)
                           .cwiseQuotient(eig.eigenvalues());
    const Vector trial = out.x + dir;
    const double trial_value = safe_eval(objective, trial);
    if (!std::isfinite(trial_value) ||
        trial_value > out.value + 1e-12 * std::max(1.0, std::abs(out.value))) {
      break;
    }
    Vector trial_grad;
    try {
      trial_grad = gradient(trial);
    } catch (const Error&) {
      break;
    }
    if (trial_grad.cwiseAbs().maxCoeff() >= out.gradient.cwiseAbs().maxCoeff()) break;
    out.x = trial;
    out.value = trial_value;
    out.gradient = trial_grad;
    ++out.iterations;
  }

  out.converged = small_gradient(out.gradient, out.value, options.gradient_tolerance);
  return out;
}

}  // namespace dpdtest
