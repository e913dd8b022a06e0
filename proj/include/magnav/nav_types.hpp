#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "magnav/geometry.hpp"

namespace magnav {

struct ImuSample {
  double t = 0.0;
  Vec3 acc = Vec3::Zero();   // specific force, m/s^2, body frame
  Vec3 gyro = Vec3::Zero();  // angular rate, rad/s, body frame
};

// Inertial navigation backbone: position/velocity in the navigation frame
// (z up), attitude body-to-nav, accelerometer and gyroscope biases.
struct NavState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Quat q = Quat::Identity();
  Vec3 ba = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
};

struct PoseFixSample {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
};

// One timestamped sensor bundle. Magnetometer readings are stacked per
// sensor (3N), ordered as the array geometry.
struct SensorFrame {
  double t = 0.0;
  std::optional<ImuSample> imu;
  std::optional<Eigen::VectorXd> mag;
  std::optional<double> baro;  // altitude, offset-corrected, m
  std::optional<PoseFixSample> fix;
};

// Body-frame magnetometer positions.
struct ArrayGeometry {
  std::vector<Vec3> positions;

  int size() const { return static_cast<int>(positions.size()); }
  // Distinct positions spanning at least two dimensions (so the local
  // regression is well posed). Throws std::invalid_argument otherwise.
  void validate() const;

  // The default 30-sensor planar board: 6 x 5 grid over 345 mm x 245 mm,
  // centered on the origin, z = 0.
  static ArrayGeometry default_board();
};

// Relative pose between two clone epochs. dp is expressed in the navigation
// frame; dq takes the body frame at i to the body frame at j. The 6x6
// covariance is over (dp error [nav frame], dq right-perturbation rotation
// vector [frame of the later pose]).
struct OdometryIncrement {
  double t_start = 0.0;
  double t_end = 0.0;
  int step_start = 0;
  int step_end = 0;
  Vec3 dp = Vec3::Zero();
  Quat dq = Quat::Identity();
  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  Eigen::Matrix<double, 6, 1> pose_var =
      Eigen::Matrix<double, 6, 1>::Zero();  // diag of (p, att) covariance
  bool fused_epoch = false;  // tight system: global-model update at this row
};

}  // namespace magnav
