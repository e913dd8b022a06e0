#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "magnav/eskf.hpp"
#include "magnav/filter_config.hpp"
#include "magnav/global_field.hpp"
#include "magnav/mains_filter.hpp"
#include "magnav/measurement_models.hpp"

namespace magnav {

// Back end of the loosely coupled system: dead reckoning on odometry
// increments with array and barometer updates against the global field
// model. State is [p q eta]. Raw IMU never enters this filter; it consumes
// MAINS output plus raw magnetometer/barometer streams only.
class LooseSlamFilter {
 public:
  LooseSlamFilter(const ArrayGeometry& geometry, const GpDomain& domain,
                  const LooseSlamConfig& config);

  void initialize(const Vec3& p0, const Quat& q0, double t0);

  void predict(const OdometryIncrement& increment);
  UpdateRecord update_mag(const Eigen::VectorXd& stacked_mag);
  UpdateRecord update_baro(double altitude);
  UpdateRecord update_fix(const PoseFixSample& fix);

  const FilterState& state() const { return state_; }
  Eigen::VectorXd eta() const { return state_.seg("eta"); }
  TrajectoryPoint trajectory_point() const;
  int out_of_domain_count() const { return mag_model_.out_of_domain_count(); }

  void set_diagnostics(DiagnosticSink sink) { sink_ = std::move(sink); }

  int mag_updates = 0;
  int baro_updates = 0;
  int fix_updates = 0;
  int skipped_updates = 0;

 private:
  UpdateRecord noted(UpdateRecord rec);

  const GpDomain* domain_;
  LooseSlamConfig cfg_;
  OdometryProcess process_;
  MagArrayGlobalModel mag_model_;
  BaroModel baro_model_;
  PoseFixModel fix_model_;
  EskfOptions eskf_options_;
  FilterState state_;
  DiagnosticSink sink_;
};

struct LooseRunResult {
  std::vector<TrajectoryPoint> trajectory;  // one row per SLAM epoch
  MainsRunResult mains;
  Vec3 final_p = Vec3::Zero();
  Quat final_q = Quat::Identity();
  Eigen::VectorXd final_eta;
  Eigen::VectorXd eta_cov_diagonal;
  int mag_updates = 0;
  int baro_updates = 0;
  int fix_updates = 0;
  int skipped_updates = 0;
  int out_of_domain = 0;
};

// Cascade: runs the array-aided odometry front end over the frames, feeds
// each emitted increment to the SLAM stage, applies the mag frame at each
// SLAM epoch and the freshest barometer/pose-fix samples.
LooseRunResult run_loose_slam(const std::vector<SensorFrame>& frames,
                              const ArrayGeometry& geometry,
                              const GpDomain& domain,
                              const NavFilterConfig& mains_config,
                              const LooseSlamConfig& slam_config,
                              const DiagnosticSink& sink = nullptr);

}  // namespace magnav
