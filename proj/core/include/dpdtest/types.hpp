#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>

namespace dpdtest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A point in the parameter space of an INH family.
///
/// The regression families in this library use the layout
/// theta = (beta_1, ..., beta_p, sigma); `beta()` and `sigma()` read that
/// layout. Other families interpret `theta` however they like.
class ParamPoint {
 public:
  ParamPoint() = default;
  explicit ParamPoint(Vector theta, bool restricted = false)
      : theta_(std::move(theta)), restricted_(restricted) {}

  static ParamPoint regression(const Vector& beta, double sigma, bool restricted = false) {
    Vector theta(beta.size() + 1);
    theta.head(beta.size()) = beta;
    theta(beta.size()) = sigma;
    return ParamPoint(std::move(theta), restricted);
  }

  const Vector& theta() const { return theta_; }
  Vector& theta() { return theta_; }
  Index dim() const { return theta_.size(); }

  bool restricted() const { return restricted_; }
  void set_restricted(bool r) { restricted_ = r; }

  Vector beta() const { return theta_.head(theta_.size() - 1); }
  double sigma() const { return theta_(theta_.size() - 1); }

 private:
  Vector theta_;
  bool restricted_ = false;
};

/// Responses with an optional fixed design.
struct ObservationSet {
  Vector y;
  std::optional<Matrix> x;

  Index size() const { return y.size(); }
};

}  // namespace dpdtest
