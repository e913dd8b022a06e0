#include "magnav/process_models.hpp"

#include <stdexcept>

namespace magnav {

NavState ins_mechanization(const NavState& x, const ImuSample& u0,
                           const ImuSample& u1, double dt,
                           const InsParams& params) {
  if (!(dt > 0.0) || dt > 0.5) {
    throw std::invalid_argument("ins_mechanization: dt outside (0, 0.5]");
  }
  const Vec3 f0 = u0.acc - x.ba;
  const Vec3 f1 = u1.acc - x.ba;
  const Vec3 w = 0.5 * (u0.gyro + u1.gyro) - x.bg;

  const Mat3 r0 = rotation_matrix(x.q);
  const Quat q1 = quat_multiply(x.q, quat_exp(w * dt));
  const Mat3 r1 = rotation_matrix(q1);

  const Vec3 a_nav = 0.5 * (r0 * f0 + r1 * f1) + params.gravity_vector();

  NavState out = x;
  out.q = q1;
  out.v = x.v + a_nav * dt;
  out.p = x.p + x.v * dt + 0.5 * a_nav * dt * dt;
  return out;
}

NavState ins_mechanization(const NavState& x, const ImuSample& u, double dt,
                           const InsParams& params) {
  return ins_mechanization(x, u, u, dt, params);
}

Eigen::VectorXd InsThetaProcess::pack_input(const ImuSample& u0,
                                            const ImuSample& u1) {
  Eigen::VectorXd u(12);
  u << u0.acc, u0.gyro, u1.acc, u1.gyro;
  return u;
}

void InsThetaProcess::propagate(const FilterState& state,
                                const Eigen::VectorXd& u, double dt,
                                Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                                Eigen::MatrixXd& qd) const {
  const auto& layout = *state.layout;
  const int t_dim = layout.tangent_dim();

  NavState nav;
  nav.p = state.seg("p");
  nav.v = state.seg("v");
  nav.q = state.quat("q");
  nav.ba = state.seg("ba");
  nav.bg = state.seg("bg");

  ImuSample u0, u1;
  u0.acc = u.segment<3>(0);
  u0.gyro = u.segment<3>(3);
  u1.acc = u.segment<3>(6);
  u1.gyro = u.segment<3>(9);

  const NavState next = ins_mechanization(nav, u0, u1, dt, opt_.ins);

  x_next = state.x;
  const auto& bp = layout.block("p");
  const auto& bv = layout.block("v");
  const auto& bq = layout.block("q");
  const auto& bba = layout.block("ba");
  const auto& bbg = layout.block("bg");
  x_next.segment<3>(bp.nominal_offset) = next.p;
  x_next.segment<3>(bv.nominal_offset) = next.v;
  x_next(bq.nominal_offset) = next.q.w();
  x_next(bq.nominal_offset + 1) = next.q.x();
  x_next(bq.nominal_offset + 2) = next.q.y();
  x_next(bq.nominal_offset + 3) = next.q.z();

  // Tangent-space transition. Blocks not touched below (biases, clones, eta)
  // keep identity dynamics.
  f = Eigen::MatrixXd::Identity(t_dim, t_dim);
  qd = Eigen::MatrixXd::Zero(t_dim, t_dim);

  const Vec3 f0 = u0.acc - nav.ba;
  const Vec3 f1 = u1.acc - nav.ba;
  const Vec3 w = 0.5 * (u0.gyro + u1.gyro) - nav.bg;
  const Mat3 r0 = rotation_matrix(nav.q);
  const Mat3 rd = so3_exp(w * dt);
  const Mat3 r1 = r0 * rd;
  const Mat3 jr = so3_right_jacobian(w * dt);

  // Sensitivities of the averaged navigation-frame acceleration.
  const Mat3 a_att = -0.5 * r0 * (skew(f0) + skew(rd * f1));
  const Mat3 a_ba = -0.5 * (r0 + r1);
  const Mat3 a_bg = 0.5 * dt * r1 * skew(f1) * jr;

  const int ip = bp.tangent_offset;
  const int iv = bv.tangent_offset;
  const int iq = bq.tangent_offset;
  const int iba = bba.tangent_offset;
  const int ibg = bbg.tangent_offset;

  f.block<3, 3>(ip, iv) = dt * Mat3::Identity();
  f.block<3, 3>(ip, iq) = 0.5 * dt * dt * a_att;
  f.block<3, 3>(ip, iba) = 0.5 * dt * dt * a_ba;
  f.block<3, 3>(ip, ibg) = 0.5 * dt * dt * a_bg;

  f.block<3, 3>(iv, iq) = dt * a_att;
  f.block<3, 3>(iv, iba) = dt * a_ba;
  f.block<3, 3>(iv, ibg) = dt * a_bg;

  f.block<3, 3>(iq, iq) = rd.transpose();
  f.block<3, 3>(iq, ibg) = -dt * jr;

  // Discrete noise: white accel/gyro plus bias random walks, mapped through
  // the integration as step-average noises with variance sigma^2 / dt.
  const double sa2 = opt_.imu.sigma_acc * opt_.imu.sigma_acc / dt;
  const double sg2 = opt_.imu.sigma_gyro * opt_.imu.sigma_gyro / dt;
  const double sba2 = opt_.imu.sigma_acc_bias_rw * opt_.imu.sigma_acc_bias_rw / dt;
  const double sbg2 = opt_.imu.sigma_gyro_bias_rw * opt_.imu.sigma_gyro_bias_rw / dt;

  const Mat3 i3 = Mat3::Identity();
  const double dt2 = dt * dt;
  // accel white noise -> p, v
  qd.block<3, 3>(ip, ip) += 0.25 * dt2 * dt2 * sa2 * i3;
  qd.block<3, 3>(ip, iv) += 0.5 * dt2 * dt * sa2 * i3;
  qd.block<3, 3>(iv, ip) += 0.5 * dt2 * dt * sa2 * i3;
  qd.block<3, 3>(iv, iv) += dt2 * sa2 * i3;
  // gyro white noise -> attitude
  qd.block<3, 3>(iq, iq) += dt2 * sg2 * jr * jr.transpose();
  // bias random walks
  qd.block<3, 3>(iba, iba) += dt2 * sba2 * i3;
  qd.block<3, 3>(ibg, ibg) += dt2 * sbg2 * i3;

  if (layout.has("theta")) {
    const auto& bth = layout.block("theta");
    const int ith = bth.tangent_offset;
    const LocalCoeffs theta = state.x.segment<8>(bth.nominal_offset);

    const Quat dq = quat_exp(w * dt);
    const Vec3 dp_body = r0.transpose() * (next.p - nav.p);
    const Eigen::Matrix<double, 8, 8> transport = transport_matrix(dq, dp_body);
    const LocalCoeffs theta_next = transport * theta;
    x_next.segment<8>(bth.nominal_offset) = theta_next;

    f.block<8, 8>(ith, ith) = transport;

    // Sensitivity of theta' to the body-frame step displacement: only the
    // transported mean field moves, by R_d^T G per unit displacement.
    const Mat3 g = local_field_gradient(theta);
    const Mat3 rdt = rd.transpose();
    Eigen::Matrix<double, 8, 3> d_theta_d_dp = Eigen::Matrix<double, 8, 3>::Zero();
    d_theta_d_dp.topRows<3>() = rdt * g;

    // Sensitivity to the relative-rotation perturbation xi, where the true
    // relative rotation is R_d Exp(-xi) and xi = J_r dt * dbg.
    const Vec3 m0_next = theta_next.head<3>();
    const Mat3 g_next = local_field_gradient(theta_next);
    Eigen::Matrix<double, 8, 3> d_theta_d_xi;
    d_theta_d_xi.topRows<3>() = -skew(m0_next);
    for (int i = 0; i < 3; ++i) {
      const Mat3 sk = skew(Vec3::Unit(i));
      d_theta_d_xi.block<5, 1>(3, i) = pack_gradient(sk * g_next - g_next * sk);
    }

    // Step displacement sensitivities to the INS errors.
    const Mat3 r0t = r0.transpose();
    const Eigen::Matrix<double, 3, 3> dp_dv = dt * r0t;
    const Eigen::Matrix<double, 3, 3> dp_datt =
        skew(dp_body) + 0.5 * dt2 * r0t * a_att;
    const Eigen::Matrix<double, 3, 3> dp_dba = 0.5 * dt2 * r0t * a_ba;
    const Eigen::Matrix<double, 3, 3> dp_dbg = 0.5 * dt2 * r0t * a_bg;

    f.block<8, 3>(ith, iv) = d_theta_d_dp * dp_dv;
    f.block<8, 3>(ith, iq) = d_theta_d_dp * dp_datt;
    f.block<8, 3>(ith, iba) = d_theta_d_dp * dp_dba;
    f.block<8, 3>(ith, ibg) = d_theta_d_dp * dp_dbg + d_theta_d_xi * (dt * jr);

    const double sm2 = opt_.sigma_theta_mean * opt_.sigma_theta_mean;
    const double sgr2 = opt_.sigma_theta_grad * opt_.sigma_theta_grad;
    qd.block<3, 3>(ith, ith) += dt * sm2 * i3;
    qd.block<5, 5>(ith + 3, ith + 3) +=
        dt * sgr2 * Eigen::Matrix<double, 5, 5>::Identity();
  }

  if (layout.has("eta") && opt_.sigma_eta_rw > 0.0) {
    const auto& be = layout.block("eta");
    qd.block(be.tangent_offset, be.tangent_offset, be.tangent_dim, be.tangent_dim) +=
        dt * opt_.sigma_eta_rw * opt_.sigma_eta_rw *
        Eigen::MatrixXd::Identity(be.tangent_dim, be.tangent_dim);
  }
}

Eigen::VectorXd OdometryProcess::pack_input(const OdometryIncrement& inc) {
  Eigen::VectorXd u(7 + 36);
  u.segment<3>(0) = inc.dp;
  u(3) = inc.dq.w();
  u(4) = inc.dq.x();
  u(5) = inc.dq.y();
  u(6) = inc.dq.z();
  Eigen::Map<Eigen::Matrix<double, 6, 6>>(u.data() + 7) = inc.cov;
  return u;
}

void OdometryProcess::propagate(const FilterState& state,
                                const Eigen::VectorXd& u, double /*dt*/,
                                Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                                Eigen::MatrixXd& qd) const {
  const auto& layout = *state.layout;
  const int t_dim = layout.tangent_dim();

  const Vec3 dp = u.segment<3>(0);
  const Quat dq(u(3), u(4), u(5), u(6));
  const Eigen::Matrix<double, 6, 6> inc_cov =
      Eigen::Map<const Eigen::Matrix<double, 6, 6>>(u.data() + 7);

  const auto& bp = layout.block("p");
  const auto& bq = layout.block("q");

  x_next = state.x;
  x_next.segment<3>(bp.nominal_offset) += dp;
  const Quat q_next = quat_multiply(state.quat("q"), dq);
  x_next(bq.nominal_offset) = q_next.w();
  x_next(bq.nominal_offset + 1) = q_next.x();
  x_next(bq.nominal_offset + 2) = q_next.y();
  x_next(bq.nominal_offset + 3) = q_next.z();

  f = Eigen::MatrixXd::Identity(t_dim, t_dim);
  f.block<3, 3>(bq.tangent_offset, bq.tangent_offset) =
      rotation_matrix(dq).transpose();

  qd = Eigen::MatrixXd::Zero(t_dim, t_dim);
  qd.block<3, 3>(bp.tangent_offset, bp.tangent_offset) = inc_cov.topLeftCorner<3, 3>();
  qd.block<3, 3>(bp.tangent_offset, bq.tangent_offset) = inc_cov.topRightCorner<3, 3>();
  qd.block<3, 3>(bq.tangent_offset, bp.tangent_offset) = inc_cov.bottomLeftCorner<3, 3>();
  qd.block<3, 3>(bq.tangent_offset, bq.tangent_offset) = inc_cov.bottomRightCorner<3, 3>();
}

}  // namespace magnav
