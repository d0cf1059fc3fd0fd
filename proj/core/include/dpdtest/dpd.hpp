#pragma once

#include "dpdtest/inh_model.hpp"

namespace dpdtest {

enum class DpdMethod { closed_form, quadrature };

struct DpdValue {
  double value = 0.0;
  double tau_or_gamma = 0.0;
  DpdMethod method = DpdMethod::closed_form;
};

/// d_c(f_i(.;theta1), f_i(.;theta2)); c = 0 is the Kullback-Leibler divergence.
/// Uses the model's closed form when it has one unless `force_quadrature`.
DpdValue dpd(const InhModel& model, Index i, const ParamPoint& theta1, const ParamPoint& theta2,
             double c, bool force_quadrature = false);

/// H_n(theta) = (1/n) sum_i [ int f_i^{1+tau} - (1 + 1/tau) f_i(Y_i)^tau ].
/// At tau = 0 this is the mean negative log-likelihood; the divergent -1/tau
/// constant is dropped, so only differences are continuous in tau.
double objective_h(const InhModel& model, const ObservationSet& data, const ParamPoint& theta,
                   double tau);

/// Gradient of objective_h with respect to theta.
Vector objective_h_gradient(const InhModel& model, const ObservationSet& data,
                            const ParamPoint& theta, double tau);


/// Derivative blocks of the divergence; closed form when the model has it.
DerivBlocks deriv_blocks(const InhModel& model, Index i, const ParamPoint& theta1,
                         const ParamPoint& theta2, double gamma);

/// Same blocks by central differences of `dpd` (step 1e-5 * max(1, |theta_k|)).
DerivBlocks deriv_blocks_numeric(const InhModel& model, Index i, const ParamPoint& theta1,
                                 const ParamPoint& theta2, double gamma);

}  // namespace dpdtest
