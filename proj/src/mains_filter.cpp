#include "magnav/mains_filter.hpp"

#include <Eigen/Dense>

#include "magnav/errors.hpp"

namespace magnav {

namespace {

std::shared_ptr<StateLayout> mains_layout() {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("p", 3);
  layout->add_linear("v", 3);
  layout->add_quaternion("q");
  layout->add_linear("ba", 3);
  layout->add_linear("bg", 3);
  layout->add_linear("theta", 8);
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

MainsFilter::MainsFilter(const ArrayGeometry& geometry,
                         const NavFilterConfig& config)
    : geometry_(geometry),
      cfg_(config),
      process_(process_options(config)),
      mag_model_(geometry, config.sigma_mag),
      baro_model_(config.sigma_baro),
      fix_model_(config.sigma_fix_pos, config.sigma_fix_att),
      state_(make_state(mains_layout())) {
  eskf_options_.chi_sq_gate = config.chi_sq_gate;
}

void MainsFilter::initialize(const NavState& x0, double t0) {
  state_ = make_state(mains_layout());
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
  state_.cov = diag.asDiagonal();

  augment_clones(state_, {{"p", "past_p"}, {"q", "past_q"}});

  initialized_ = true;
  theta_initialized_ = false;
  prev_imu_.reset();
  steps_ = 0;
  mag_frames_ = 0;
  clone_step_ = 1;
  clone_time_ = t0;
}

NavState MainsFilter::nav_state() const {
  NavState x;
  x.p = state_.seg("p");
  x.v = state_.seg("v");
  x.q = state_.quat("q");
  x.ba = state_.seg("ba");
  x.bg = state_.seg("bg");
  return x;
}

TrajectoryPoint MainsFilter::trajectory_point() const {
  TrajectoryPoint pt;
  pt.t = state_.t;
  pt.p = state_.seg("p");
  pt.q = state_.quat("q");
  const auto& bp = state_.layout->block("p");
  const auto& bq = state_.layout->block("q");
  pt.pose_var.head<3>() =
      state_.cov.diagonal().segment<3>(bp.tangent_offset);
  pt.pose_var.tail<3>() =
      state_.cov.diagonal().segment<3>(bq.tangent_offset);
  return pt;
}

void MainsFilter::note(const UpdateRecord& rec) {
  if (!rec.applied) ++skipped_updates;
  if (sink_) sink_(rec);
}

OdometryIncrement MainsFilter::extract_increment() const {
  const Vec3 p = state_.seg("p");
  const Vec3 pp = state_.seg("past_p");
  const Quat q = state_.quat("q");
  const Quat qp = state_.quat("past_q");

  OdometryIncrement inc;
  inc.t_start = clone_time_;
  inc.t_end = state_.t;
  inc.step_start = clone_step_;
  inc.step_end = steps_;
  inc.dp = p - pp;
  inc.dq = quat_multiply(quat_conjugate(qp), q);

  // Covariance of (dp [nav], dq right-perturbation) from the joint clone
  // covariance. Rows: dp = p_j - p_i; attitude: w = delta_j - R_d^T delta_i.
  const auto& bp = state_.layout->block("p");
  const auto& bq = state_.layout->block("q");
  const auto& bpp = state_.layout->block("past_p");
  const auto& bpq = state_.layout->block("past_q");

  Eigen::Matrix<double, 12, 12> sub;
  const int offs[4] = {bpp.tangent_offset, bp.tangent_offset,
                       bpq.tangent_offset, bq.tangent_offset};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      sub.block<3, 3>(3 * a, 3 * b) =
          state_.cov.block<3, 3>(offs[a], offs[b]);
    }
  }

  Eigen::Matrix<double, 6, 12> a_mat = Eigen::Matrix<double, 6, 12>::Zero();
  a_mat.block<3, 3>(0, 0) = -Mat3::Identity();
  a_mat.block<3, 3>(0, 3) = Mat3::Identity();
  a_mat.block<3, 3>(3, 6) = -rotation_matrix(inc.dq).transpose();
  a_mat.block<3, 3>(3, 9) = Mat3::Identity();

  inc.cov = a_mat * sub * a_mat.transpose();
  inc.cov = 0.5 * (inc.cov + inc.cov.transpose()).eval();
  return inc;
}

std::optional<OdometryIncrement> MainsFilter::process(const SensorFrame& frame) {
  std::optional<OdometryIncrement> emitted;

  if (frame.imu) {
    if (!prev_imu_) {
      prev_imu_ = *frame.imu;
      steps_ = 1;
      state_.t = frame.t;
      clone_step_ = 1;
      clone_time_ = frame.t;
      reclone(state_, {{"p", "past_p"}, {"q", "past_q"}});
    } else {
      const double dt = frame.t - prev_imu_->t;
      if (dt > cfg_.max_time_gap) {
        throw GapTooLarge("MainsFilter: IMU gap of " + std::to_string(dt) +
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
        note(eskf_update(state_, mag_model_, *frame.mag, eskf_options_));
        ++mag_updates;
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

  // Emit the increment once the interval spans exactly K propagation steps,
  // using the posterior at this step; then refresh the clone.
  if (frame.imu && steps_ == clone_step_ + cfg_.clone_interval) {
    emitted = extract_increment();
    reclone(state_, {{"p", "past_p"}, {"q", "past_q"}});
    clone_step_ = steps_;
    clone_time_ = state_.t;
  }

  return emitted;
}

NavState initial_state_estimate(const std::vector<SensorFrame>& frames,
                                double window, double gravity) {
  NavState x;
  if (frames.empty()) return x;
  const double t0 = frames.front().t;

  for (const auto& f : frames) {
    if (f.t - t0 > window) break;
    if (f.fix) {
      x.p = f.fix->p;
      x.q = f.fix->q;
      return x;
    }
  }

  Vec3 acc_sum = Vec3::Zero();
  int count = 0;
  for (const auto& f : frames) {
    if (f.t - t0 > window) break;
    if (f.imu) {
      acc_sum += f.imu->acc;
      ++count;
    }
  }
  if (count > 0 && acc_sum.norm() > 0.1 * gravity * count) {
    const Vec3 mean = acc_sum / count;
    x.q = Quat::FromTwoVectors(mean, Vec3(0, 0, 1));
  }
  return x;
}

MainsRunResult run_mains(const std::vector<SensorFrame>& frames,
                         const ArrayGeometry& geometry,
                         const NavFilterConfig& config,
                         const DiagnosticSink& sink) {
  MainsRunResult result;
  if (frames.empty()) return result;

  MainsFilter filter(geometry, config);
  filter.initialize(initial_state_estimate(frames, 1.0, config.ins.gravity),
                    frames.front().t);
  if (sink) filter.set_diagnostics(sink);

  result.trajectory.reserve(frames.size());
  for (const auto& frame : frames) {
    auto inc = filter.process(frame);
    if (frame.imu) {
      result.trajectory.push_back(filter.trajectory_point());
    }
    if (inc) {
      result.increments.push_back(*inc);
    }
  }

  result.final_state = filter.nav_state();
  result.final_theta = filter.theta();
  result.mag_updates = filter.mag_updates;
  result.baro_updates = filter.baro_updates;
  result.fix_updates = filter.fix_updates;
  result.skipped_updates = filter.skipped_updates;
  return result;
}

std::vector<TrajectoryPoint> run_strapdown(const std::vector<SensorFrame>& frames,
                                           const NavState& x0,
                                           const InsParams& params,
                                           double max_time_gap) {
  std::vector<TrajectoryPoint> trajectory;
  NavState x = x0;
  std::optional<ImuSample> prev;
  for (const auto& frame : frames) {
    if (!frame.imu) continue;
    if (prev) {
      const double dt = frame.t - prev->t;
      if (dt > max_time_gap) {
        throw GapTooLarge("run_strapdown: IMU gap at t=" + std::to_string(frame.t));
      }
      if (dt > 0.0) {
        x = ins_mechanization(x, *prev, *frame.imu, dt, params);
      }
    }
    prev = *frame.imu;
    TrajectoryPoint pt;
    pt.t = frame.t;
    pt.p = x.p;
    pt.q = x.q;
    trajectory.push_back(pt);
  }
  return trajectory;
}

}  // namespace magnav
