#pragma once

#include "dpdtest/types.hpp"

#include <functional>

namespace dpdtest {

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;  // relative to max(1, |f|)
  int newton_polish_steps = 20;
};

struct MinimizeResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained smooth minimisation: BFGS with Armijo backtracking, then a
/// few Newton steps using a finite-difference Hessian of `gradient`.
/// Objective evaluations that throw or return non-finite values are treated
/// as +infinity by the line search.
MinimizeResult minimize(const std::function<double(const Vector&)>& objective,
                        const std::function<Vector(const Vector&)>& gradient, Vector x0,
                        const MinimizeOptions& options = {});

}  // namespace dpdtest
