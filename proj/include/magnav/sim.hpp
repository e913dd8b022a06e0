#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "magnav/global_field.hpp"
#include "magnav/local_field.hpp"
#include "magnav/nav_types.hpp"
#include "magnav/process_models.hpp"

namespace magnav {

// Synthetic ground truth: a field drawn from the GP prior, a smooth
// trajectory through it, and sensor streams with known noise. Everything is
// deterministic under (seed, config).

struct SyntheticWorld {
  GpDomain domain;
  Eigen::VectorXd eta_true;
  Vec3 gravity = Vec3(0, 0, -9.81);
  std::uint64_t seed = 0;

  SyntheticWorld(GpDomain d, Eigen::VectorXd eta, std::uint64_t s)
      : domain(std::move(d)), eta_true(std::move(eta)), seed(s) {}

  Vec3 field_at(const Vec3& r) const {
    return evaluate_global_field(domain, eta_true, r);
  }
};

// eta* ~ N(0, Lambda), reproducible under seed.
SyntheticWorld sample_world(const GpDomain& domain, std::uint64_t seed);

struct Waypoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

struct TrajectorySpec {
  std::vector<Waypoint> waypoints;  // strictly increasing times
  double sample_rate = 100.0;       // Hz
  double max_speed = 5.0;           // m/s, spline feasibility bound
  std::string family = "custom";    // long-corridor | loop | spiral | custom
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  Quat q = Quat::Identity();       // yaw-following attitude, roll = pitch = 0
  Vec3 omega_body = Vec3::Zero();  // body angular rate
};

// C2 natural-cubic-spline interpolation through the waypoints with analytic
// first and second derivatives. Throws InfeasibleSpeed when the spline speed
// exceeds spec.max_speed.
std::vector<TrajectorySample> synthesize_trajectory(const TrajectorySpec& spec);

// Canned trajectory families (each begins with a standstill window inside
// the capture volume).
TrajectorySpec corridor_loop_spec(double duration, double width, double depth);
TrajectorySpec long_corridor_spec(double duration, double length);
TrajectorySpec spiral_climb_spec(double duration, double radius, double climb);

// Cuboid sized to hold the trajectory with the configured margin (fractional
// inflation plus 2 * ell_se per side), then populated with num_modes basis
// functions.
GpDomain domain_for_trajectory(const std::vector<TrajectorySample>& trajectory,
                               const GpHyperparams& hp, int num_modes,
                               double margin_fraction = 0.2);

struct SimNoise {
  ImuNoise imu;                        // white-noise densities
  double sigma_accel_bias_draw = 0.03; // constant true bias, per axis, m/s^2
  double sigma_gyro_bias_draw = 0.003; // rad/s
  double sigma_mag = 0.5;              // uT per axis
  double sigma_baro = 0.1;             // m
  double sigma_fix_pos = 0.002;        // m
  double sigma_fix_att = 0.002;        // rad
  double baro_rate = 10.0;             // Hz
  double fix_rate = 100.0;             // Hz
  double fix_duration = 6.0;           // s of pose fixes from stream start
  int mag_decimation = 1;              // emit mag every k-th frame
  bool zero_noise = false;             // exact sensors, zero biases
};

struct SimOutput {
  std::vector<SensorFrame> frames;
  std::vector<TrajectoryPoint> truth;
  NavState initial_state;  // true state at the first sample (biases included)
};

SimOutput synthesize_sensors(const SyntheticWorld& world,
                             const std::vector<TrajectorySample>& trajectory,
                             const ArrayGeometry& geometry,
                             const SimNoise& noise, std::uint64_t seed);

// First-order local model of the world field at a pose: body-frame mean plus
// the symmetric trace-free projection of the body-frame field Jacobian.
LocalCoeffs local_truth_coeffs(const SyntheticWorld& world, const Vec3& p,
                               const Quat& q);

}  // namespace magnav
