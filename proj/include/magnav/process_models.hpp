#pragma once

#include <Eigen/Core>

#include "magnav/eskf.hpp"
#include "magnav/local_field.hpp"
#include "magnav/nav_types.hpp"

namespace magnav {

// Continuous-time noise densities of the inertial error model.
struct ImuNoise {
  double sigma_acc = 0.02;          // m/s^2/sqrt(Hz)
  double sigma_gyro = 0.002;        // rad/s/sqrt(Hz)
  double sigma_acc_bias_rw = 1e-4;  // m/s^2 * sqrt(Hz) random walk
  double sigma_gyro_bias_rw = 1e-5; // rad/s * sqrt(Hz) random walk
};

struct InsParams {
  double gravity = 9.81;  // m/s^2, along -z of the navigation frame
  Vec3 gravity_vector() const { return Vec3(0.0, 0.0, -gravity); }
};

// Strapdown step from t0 to t0+dt. Attitude integrates the mean angular rate
// exactly; velocity uses the trapezoid of the rotated specific force;
// position integrates velocity trapezoidally. Biases are held.
NavState ins_mechanization(const NavState& x, const ImuSample& u0,
                           const ImuSample& u1, double dt,
                           const InsParams& params = {});

// Zeroth-order-hold convenience overload (u used at both interval ends).
NavState ins_mechanization(const NavState& x, const ImuSample& u, double dt,
                           const InsParams& params = {});

// Process model for every filter carrying INS blocks (p, v, q, ba, bg),
// optionally a local-field block "theta" (transported with the body motion)
// and a global-field block "eta" (held). Clone blocks are held with zero
// noise. Input vector u is [acc0, gyro0, acc1, gyro1].
class InsThetaProcess final : public ProcessModel {
 public:
  struct Options {
    InsParams ins;
    ImuNoise imu;
    double sigma_theta_mean = 1.0;  // uT / sqrt(s)
    double sigma_theta_grad = 5.0;  // uT/m / sqrt(s)
    double sigma_eta_rw = 0.0;      // global coefficients random walk
  };

  explicit InsThetaProcess(Options options) : opt_(options) {}

  std::string name() const override { return "ins_theta"; }
  void propagate(const FilterState& state, const Eigen::VectorXd& u, double dt,
                 Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                 Eigen::MatrixXd& qd) const override;

  static Eigen::VectorXd pack_input(const ImuSample& u0, const ImuSample& u1);

  const Options& options() const { return opt_; }

 private:
  Options opt_;
};

// Dead-reckoning process of the loosely coupled SLAM stage: pose composed
// with an odometry increment, field coefficients held. The increment
// covariance enters as the process noise of the step.
class OdometryProcess final : public ProcessModel {
 public:
  std::string name() const override { return "odometry"; }
  void propagate(const FilterState& state, const Eigen::VectorXd& u, double dt,
                 Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                 Eigen::MatrixXd& qd) const override;

  static Eigen::VectorXd pack_input(const OdometryIncrement& inc);
};

}  // namespace magnav
