#pragma once

#include <Eigen/Core>

#include "magnav/eskf.hpp"

namespace magnav {

// Central finite-difference verification of analytic Jacobians. Relative
// error is measured against the largest finite-difference entry, so near-zero
// entries do not blow up the ratio.

struct JacobianCheckResult {
  double max_rel_error = 0.0;
  int worst_row = -1;
  int worst_col = -1;
  bool pass(double tol = 1e-4) const { return max_rel_error <= tol; }
};

JacobianCheckResult compare_jacobians(const Eigen::MatrixXd& analytic,
                                      const Eigen::MatrixXd& numeric);

// H against d residual(state ⊕ delta) / d delta with the measurement taken
// noise-free at the perturbed state.
JacobianCheckResult check_measurement_jacobian(const MeasurementModel& model,
                                               const FilterState& state,
                                               double step = 1e-6);

// F against the tangent-space difference of propagated perturbed states.
JacobianCheckResult check_process_jacobian(const ProcessModel& model,
                                           const FilterState& state,
                                           const Eigen::VectorXd& u, double dt,
                                           double step = 1e-6);

// Generic map R^n (tangent of state) -> R^m for one-off linearizations
// (e.g. the odometry covariance transform).
JacobianCheckResult check_jacobian_of(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, int n,
    const Eigen::MatrixXd& analytic, double step = 1e-6);

}  // namespace magnav
