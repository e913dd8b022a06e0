#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "magnav/eskf.hpp"
#include "magnav/filter_config.hpp"
#include "magnav/measurement_models.hpp"
#include "magnav/nav_types.hpp"
#include "magnav/process_models.hpp"

namespace magnav {

// Magnetic-field-aided inertial odometry: an error-state EKF over
// [p v q ba bg theta] with the array measurement registering against the
// local polynomial model. A pose clone (past_p, past_q) is kept in the state
// so relative-pose increments carry a consistent covariance; the clone is
// refreshed every K-th IMU step and the increment between clone epochs is
// emitted with its covariance.
class MainsFilter {
 public:
  MainsFilter(const ArrayGeometry& geometry, const NavFilterConfig& config);

  void initialize(const NavState& x0, double t0);

  // Feed one time-ordered frame. Returns the odometry increment when this
  // frame completes a clone interval. Throws GapTooLarge on IMU gaps above
  // config.max_time_gap.
  std::optional<OdometryIncrement> process(const SensorFrame& frame);

  const FilterState& state() const { return state_; }
  NavState nav_state() const;
  LocalCoeffs theta() const { return state_.seg("theta"); }
  TrajectoryPoint trajectory_point() const;
  int step_count() const { return steps_; }
  bool initialized() const { return initialized_; }

  void set_diagnostics(DiagnosticSink sink) { sink_ = std::move(sink); }

  // Counters for reports.
  int mag_updates = 0;
  int baro_updates = 0;
  int fix_updates = 0;
  int skipped_updates = 0;

 private:
  OdometryIncrement extract_increment() const;
  void note(const UpdateRecord& rec);

  ArrayGeometry geometry_;
  NavFilterConfig cfg_;
  InsThetaProcess process_;
  MagArrayLocalModel mag_model_;
  BaroModel baro_model_;
  PoseFixModel fix_model_;
  EskfOptions eskf_options_;

  FilterState state_;
  DiagnosticSink sink_;
  bool initialized_ = false;
  bool theta_initialized_ = false;
  std::optional<ImuSample> prev_imu_;
  int steps_ = 0;            // IMU samples seen
  int mag_frames_ = 0;       // mag frames seen (before decimation)
  int clone_step_ = 0;       // step index the clone was taken at
  double clone_time_ = 0.0;
};

// Initial state guess from the leading frames: pose from the first fix when
// present, otherwise roll/pitch from the mean accelerometer direction with
// zero yaw. Velocity and biases start at zero.
NavState initial_state_estimate(const std::vector<SensorFrame>& frames,
                                double window, double gravity = 9.81);

struct MainsRunResult {
  std::vector<TrajectoryPoint> trajectory;  // one row per IMU step
  std::vector<OdometryIncrement> increments;
  NavState final_state;
  Eigen::VectorXd final_theta;
  int mag_updates = 0;
  int baro_updates = 0;
  int fix_updates = 0;
  int skipped_updates = 0;
};

MainsRunResult run_mains(const std::vector<SensorFrame>& frames,
                         const ArrayGeometry& geometry,
                         const NavFilterConfig& config,
                         const DiagnosticSink& sink = nullptr);

// Plain strapdown dead reckoning from the same initial state; the reference
// run_mains collapses to when every update is disabled.
std::vector<TrajectoryPoint> run_strapdown(const std::vector<SensorFrame>& frames,
                                           const NavState& x0,
                                           const InsParams& params,
                                           double max_time_gap = 0.5);

}  // namespace magnav
