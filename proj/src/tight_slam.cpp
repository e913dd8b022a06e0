#include "magnav/tight_slam.hpp"

#include <algorithm>

#include "magnav/errors.hpp"
#include "magnav/mains_filter.hpp"

namespace magnav {

namespace {

std::shared_ptr<StateLayout> tight_layout(int eta_dim) {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("p", 3);
  layout->add_linear("v", 3);
  layout->add_quaternion("q");
  layout->add_linear("ba", 3);
  layout->add_linear("bg", 3);
  layout->add_linear("theta", 8);
  layout->add_linear("eta", eta_dim);
  return layout;
}

InsThetaProcess::Options process_options(const NavFilterConfig& cfg) {
  InsThetaProcess::Options opt;
  opt.ins = cfg.ins;
  opt.imu = cfg.imu;
  opt.sigma_theta_mean = cfg.sigma_theta_mean;
  opt.sigma_theta_grad = cfg.sigma_theta_grad;
  opt.sigma_eta_rw = cfg.sigma_eta_rw;
  return opt;
}

}  // namespace

TightSlamFilter::TightSlamFilter(const ArrayGeometry& geometry,
                                 const GpDomain& domain,
                                 const NavFilterConfig& config)
    : geometry_(geometry),
      domain_(&domain),
      cfg_(config),
      process_(process_options(config)),
      local_model_(geometry, config.sigma_mag),
      fused_model_(geometry, domain, config.sigma_mag),
      baro_model_(config.sigma_baro),
      fix_model_(config.sigma_fix_pos, config.sigma_fix_att),
      state_(make_state(tight_layout(domain.coeff_dim()))) {
  eskf_options_.chi_sq_gate = config.chi_sq_gate;
}

void TightSlamFilter::initialize(const NavState& x0, double t0) {
  state_ = make_state(tight_layout(domain_->coeff_dim()));
  state_.t = t0;
  state_.seg("p") = x0.p;
  state_.seg("v") = x0.v;
  state_.set_quat("q", x0.q);
  state_.seg("ba") = x0.ba;
  state_.seg("bg") = x0.bg;

  Eigen::VectorXd diag(state_.layout->tangent_dim());
  diag.segment<3>(0).setConstant(cfg_.init_pos * cfg_.init_pos);
  diag.segment<3>(3).setConstant(cfg_.init_vel * cfg_.init_vel);
  diag(6) = cfg_.init_att_rp * cfg_.init_att_rp;
  diag(7) = cfg_.init_att_rp * cfg_.init_att_rp;
  diag(8) = cfg_.init_att_yaw * cfg_.init_att_yaw;
  diag.segment<3>(9).setConstant(cfg_.init_ba * cfg_.init_ba);
  diag.segment<3>(12).setConstant(cfg_.init_bg * cfg_.init_bg);
  diag.segment<3>(15).setConstant(cfg_.init_theta_mean * cfg_.init_theta_mean);
  diag.segment<5>(18).setConstant(cfg_.init_theta_grad * cfg_.init_theta_grad);
  diag.tail(domain_->coeff_dim()) = prior_covariance_diagonal(*domain_);
  state_.cov = diag.asDiagonal();

  initialized_ = true;
  theta_initialized_ = false;
  prev_imu_.reset();
  steps_ = 0;
  mag_frames_ = 0;
  mag_processed_ = 0;
  last_fused_ = false;
}

NavState TightSlamFilter::nav_state() const {
  NavState x;
  x.p = state_.seg("p");
  x.v = state_.seg("v");
  x.q = state_.quat("q");
  x.ba = state_.seg("ba");
  x.bg = state_.seg("bg");
  return x;
}

TrajectoryPoint TightSlamFilter::trajectory_point() const {
  TrajectoryPoint pt;
  pt.t = state_.t;
  pt.p = state_.seg("p");
  pt.q = state_.quat("q");
  pt.pose_var.head<3>() = state_.cov.diagonal().head<3>();
  pt.pose_var.tail<3>() = state_.cov.diagonal().segment<3>(6);
  pt.fused_epoch = last_fused_;
  return pt;
}

void TightSlamFilter::note(const UpdateRecord& rec) {
  if (!rec.applied) ++skipped_updates;
  if (sink_) sink_(rec);
}

bool TightSlamFilter::process(const SensorFrame& frame) {
  last_fused_ = false;

  if (frame.imu) {
    if (!prev_imu_) {
      prev_imu_ = *frame.imu;
      steps_ = 1;
      state_.t = frame.t;
    } else {
      const double dt = frame.t - prev_imu_->t;
      if (dt > cfg_.max_time_gap) {
        throw GapTooLarge("TightSlamFilter: IMU gap of " + std::to_string(dt) +
                          " s at t=" + std::to_string(frame.t));
      }
      if (dt > 0.0) {
        eskf_propagate(state_, process_,
                       InsThetaProcess::pack_input(*prev_imu_, *frame.imu), dt);
        ++steps_;
      }
      prev_imu_ = *frame.imu;
    }
  }

  if (frame.mag && cfg_.use_mag) {
    if (mag_frames_ % cfg_.mag_decimation == 0) {
      if (!theta_initialized_) {
        state_.seg("theta") =
            fit_local_coeffs(geometry_.positions, *frame.mag);
        theta_initialized_ = true;
      } else {
        ++mag_processed_;
        if (mag_processed_ % cfg_.fused_period == 0) {
          note(eskf_update(state_, fused_model_, *frame.mag, eskf_options_));
          ++fused_updates;
          last_fused_ = true;
        } else {
          note(eskf_update(state_, local_model_, *frame.mag, eskf_options_));
          ++mag_updates;
        }
      }
    }
    ++mag_frames_;
  }

  if (frame.baro && cfg_.use_baro) {
    Eigen::VectorXd y(1);
    y(0) = *frame.baro;
    note(eskf_update(state_, baro_model_, y, eskf_options_));
    ++baro_updates;
  }

  if (frame.fix && cfg_.use_fix) {
    note(eskf_update(state_, fix_model_, PoseFixModel::pack(*frame.fix),
                     eskf_options_));
    ++fix_updates;
  }

  return last_fused_;
}

TightRunResult run_tight_slam(const std::vector<SensorFrame>& frames,
                              const ArrayGeometry& geometry,
                              const GpDomain& domain,
                              const NavFilterConfig& config,
                              const DiagnosticSink& sink) {
  TightRunResult result;
  if (frames.empty()) return result;

  TightSlamFilter filter(geometry, domain, config);
  filter.initialize(initial_state_estimate(frames, 1.0, config.ins.gravity),
                    frames.front().t);
  if (sink) filter.set_diagnostics(sink);

  result.trajectory.reserve(frames.size());
  for (const auto& frame : frames) {
    filter.process(frame);
    if (frame.imu) {
      result.trajectory.push_back(filter.trajectory_point());
    }
  }

  result.final_state = filter.nav_state();
  result.final_eta = filter.eta();
  const auto& be = filter.state().layout->block("eta");
  result.eta_cov_diagonal =
      filter.state().cov.diagonal().segment(be.tangent_offset, be.tangent_dim);
  result.final_theta = filter.theta();
  result.mag_updates = filter.mag_updates;
  result.fused_updates = filter.fused_updates;
  result.baro_updates = filter.baro_updates;
  result.fix_updates = filter.fix_updates;
  result.skipped_updates = filter.skipped_updates;
  result.out_of_domain = filter.out_of_domain_count();
  return result;
}

JumpStats position_jump_metric(const std::vector<TrajectoryPoint>& trajectory) {
  std::vector<double> fused, ordinary;
  for (size_t i = 1; i < trajectory.size(); ++i) {
    const double jump = (trajectory[i].p - trajectory[i - 1].p).norm();
    if (trajectory[i].fused_epoch) {
      fused.push_back(jump);
    } else {
      ordinary.push_back(jump);
    }
  }
  auto median = [](std::vector<double>& v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  JumpStats stats;
  stats.count_fused = static_cast<int>(fused.size());
  stats.count_ordinary = static_cast<int>(ordinary.size());
  stats.max_fused = fused.empty() ? 0.0 : *std::max_element(fused.begin(), fused.end());
  stats.max_ordinary =
      ordinary.empty() ? 0.0 : *std::max_element(ordinary.begin(), ordinary.end());
  stats.median_fused = median(fused);
  stats.median_ordinary = median(ordinary);
  return stats;
}

}  // namespace magnav
