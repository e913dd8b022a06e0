#include "magnav/jacobian_check.hpp"

#include <cmath>

namespace magnav {

JacobianCheckResult compare_jacobians(const Eigen::MatrixXd& analytic,
                                      const Eigen::MatrixXd& numeric) {
  JacobianCheckResult res;
  const double scale = std::max(numeric.cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < analytic.rows(); ++i) {
    for (int j = 0; j < analytic.cols(); ++j) {
      const double err = std::abs(analytic(i, j) - numeric(i, j)) / scale;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_row = i;
        res.worst_col = j;
      }
    }
  }
  return res;
}

JacobianCheckResult check_measurement_jacobian(const MeasurementModel& model,
                                               const FilterState& state,
                                               double step) {
  const int n = state.layout->tangent_dim();
  Eigen::MatrixXd numeric(model.dim(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    delta(j) = step;
    FilterState plus = state;
    inject_error(plus, delta);
    FilterState minus = state;
    inject_error(minus, -delta);
    // Residual of the noise-free measurement generated at the perturbed state,
    // evaluated against the unperturbed estimate.
    const Eigen::VectorXd rp = model.residual(state, model.predict(plus));
    const Eigen::VectorXd rm = model.residual(state, model.predict(minus));
    numeric.col(j) = (rp - rm) / (2.0 * step);
  }
  return compare_jacobians(model.jacobian(state), numeric);
}

JacobianCheckResult check_process_jacobian(const ProcessModel& model,
                                           const FilterState& state,
                                           const Eigen::VectorXd& u, double dt,
                                           double step) {
  const int n = state.layout->tangent_dim();
  Eigen::VectorXd x_nom;
  Eigen::MatrixXd f, qd;
  model.propagate(state, u, dt, x_nom, f, qd);
  FilterState nominal_next = state;
  nominal_next.x = x_nom;

  Eigen::MatrixXd numeric(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    delta(j) = step;
    FilterState plus = state;
    inject_error(plus, delta);
    FilterState minus = state;
    inject_error(minus, -delta);
    Eigen::VectorXd xp, xm;
    Eigen::MatrixXd ftmp, qtmp;
    model.propagate(plus, u, dt, xp, ftmp, qtmp);
    model.propagate(minus, u, dt, xm, ftmp, qtmp);
    numeric.col(j) = (state_difference(nominal_next, xp) -
                      state_difference(nominal_next, xm)) /
                     (2.0 * step);
  }
  return compare_jacobians(f, numeric);
}

JacobianCheckResult check_jacobian_of(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn, int n,
    const Eigen::MatrixXd& analytic, double step) {
  Eigen::MatrixXd numeric(analytic.rows(), n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
    delta(j) = step;
    numeric.col(j) = (fn(delta) - fn(-delta)) / (2.0 * step);
  }
  return compare_jacobians(analytic, numeric);
}

}  // namespace magnav
