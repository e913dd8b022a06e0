#include "magnav/loose_slam.hpp"

namespace magnav {

namespace {

std::shared_ptr<StateLayout> slam_layout(int eta_dim) {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("p", 3);
  layout->add_quaternion("q");
  layout->add_linear("eta", eta_dim);
  return layout;
}

}  // namespace

LooseSlamFilter::LooseSlamFilter(const ArrayGeometry& geometry,
                                 const GpDomain& domain,
                                 const LooseSlamConfig& config)
    : domain_(&domain),
      cfg_(config),
      mag_model_(geometry, domain, config.sigma_mag),
      baro_model_(config.sigma_baro),
      fix_model_(config.sigma_fix_pos, config.sigma_fix_att),
      state_(make_state(slam_layout(domain.coeff_dim()))) {
  eskf_options_.chi_sq_gate = config.chi_sq_gate;
}

void LooseSlamFilter::initialize(const Vec3& p0, const Quat& q0, double t0) {
  state_ = make_state(slam_layout(domain_->coeff_dim()));
  state_.t = t0;
  state_.seg("p") = p0;
  state_.set_quat("q", q0);

  Eigen::VectorXd diag(state_.layout->tangent_dim());
  diag.segment<3>(0).setConstant(cfg_.init_pos * cfg_.init_pos);
  diag.segment<3>(3).setConstant(cfg_.init_att * cfg_.init_att);
  diag.tail(domain_->coeff_dim()) = prior_covariance_diagonal(*domain_);
  state_.cov = diag.asDiagonal();
}

UpdateRecord LooseSlamFilter::noted(UpdateRecord rec) {
  if (!rec.applied) ++skipped_updates;
  if (sink_) sink_(rec);
  return rec;
}

void LooseSlamFilter::predict(const OdometryIncrement& increment) {
  eskf_propagate(state_, process_, OdometryProcess::pack_input(increment),
                 increment.t_end - increment.t_start);
}

UpdateRecord LooseSlamFilter::update_mag(const Eigen::VectorXd& stacked_mag) {
  ++mag_updates;
  return noted(eskf_update(state_, mag_model_, stacked_mag, eskf_options_));
}

UpdateRecord LooseSlamFilter::update_baro(double altitude) {
  ++baro_updates;
  Eigen::VectorXd y(1);
  y(0) = altitude;
  return noted(eskf_update(state_, baro_model_, y, eskf_options_));
}

UpdateRecord LooseSlamFilter::update_fix(const PoseFixSample& fix) {
  ++fix_updates;
  return noted(eskf_update(state_, fix_model_, PoseFixModel::pack(fix),
                           eskf_options_));
}

TrajectoryPoint LooseSlamFilter::trajectory_point() const {
  TrajectoryPoint pt;
  pt.t = state_.t;
  pt.p = state_.seg("p");
  pt.q = state_.quat("q");
  pt.pose_var.head<3>() = state_.cov.diagonal().head<3>();
  pt.pose_var.tail<3>() = state_.cov.diagonal().segment<3>(3);
  return pt;
}

LooseRunResult run_loose_slam(const std::vector<SensorFrame>& frames,
                              const ArrayGeometry& geometry,
                              const GpDomain& domain,
                              const NavFilterConfig& mains_config,
                              const LooseSlamConfig& slam_config,
                              const DiagnosticSink& sink) {
  LooseRunResult result;
  if (frames.empty()) return result;

  MainsFilter mains(geometry, mains_config);
  const NavState x0 =
      initial_state_estimate(frames, 1.0, mains_config.ins.gravity);
  mains.initialize(x0, frames.front().t);
  if (sink) mains.set_diagnostics(sink);

  LooseSlamFilter slam(geometry, domain, slam_config);
  slam.initialize(x0.p, x0.q, frames.front().t);
  if (sink) slam.set_diagnostics(sink);

  // Freshest unconsumed auxiliary samples, applied at SLAM epochs.
  std::optional<Eigen::VectorXd> pending_mag;
  std::optional<double> pending_baro;
  std::optional<PoseFixSample> pending_fix;

  result.trajectory.reserve(frames.size() / std::max(mains_config.clone_interval, 1) + 2);

  for (const auto& frame : frames) {
    const auto inc = mains.process(frame);
    if (frame.mag) pending_mag = *frame.mag;
    if (frame.baro) pending_baro = *frame.baro;
    if (frame.fix) pending_fix = *frame.fix;

    if (inc) {
      result.mains.increments.push_back(*inc);
      slam.predict(*inc);
      if (pending_mag && slam_config.use_mag) {
        slam.update_mag(*pending_mag);
        pending_mag.reset();
      }
      if (pending_baro && slam_config.use_baro) {
        slam.update_baro(*pending_baro);
        pending_baro.reset();
      }
      if (pending_fix && slam_config.use_fix) {
        slam.update_fix(*pending_fix);
        pending_fix.reset();
      }
      result.trajectory.push_back(slam.trajectory_point());
    }
  }

  result.mains.final_state = mains.nav_state();
  result.mains.final_theta = mains.theta();
  result.mains.mag_updates = mains.mag_updates;
  result.mains.baro_updates = mains.baro_updates;
  result.mains.fix_updates = mains.fix_updates;
  result.mains.skipped_updates = mains.skipped_updates;

  result.final_p = slam.state().seg("p");
  result.final_q = slam.state().quat("q");
  result.final_eta = slam.eta();
  const auto& be = slam.state().layout->block("eta");
  result.eta_cov_diagonal =
      slam.state().cov.diagonal().segment(be.tangent_offset, be.tangent_dim);
  result.mag_updates = slam.mag_updates;
  result.baro_updates = slam.baro_updates;
  result.fix_updates = slam.fix_updates;
  result.skipped_updates = slam.skipped_updates;
  result.out_of_domain = slam.out_of_domain_count();
  return result;
}

}  // namespace magnav
