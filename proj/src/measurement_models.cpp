#include "magnav/measurement_models.hpp"

namespace magnav {

MagArrayLocalModel::MagArrayLocalModel(const ArrayGeometry& geometry,
                                       double sigma_mag)
    : geometry_(geometry), sigma_mag_(sigma_mag) {
  geometry_.validate();
  phi_stack_.resize(3 * geometry_.size(), kLocalCoeffCount);
  for (int i = 0; i < geometry_.size(); ++i) {
    phi_stack_.middleRows<3>(3 * i) = local_regressor(geometry_.positions[i]);
  }
}

Eigen::VectorXd MagArrayLocalModel::predict(const FilterState& state) const {
  return phi_stack_ * state.seg("theta");
}

Eigen::MatrixXd MagArrayLocalModel::jacobian(const FilterState& state) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), state.layout->tangent_dim());
  const auto& b = state.layout->block("theta");
  h.middleCols<8>(b.tangent_offset) = phi_stack_;
  return h;
}

Eigen::MatrixXd MagArrayLocalModel::noise(const FilterState&) const {
  return sigma_mag_ * sigma_mag_ * Eigen::MatrixXd::Identity(dim(), dim());
}

MagArrayGlobalModel::MagArrayGlobalModel(const ArrayGeometry& geometry,
                                         const GpDomain& domain,
                                         double sigma_mag,
                                         KernelBackend backend)
    : geometry_(geometry), domain_(&domain), sigma_mag_(sigma_mag),
      backend_(backend) {
  geometry_.validate();
}

std::vector<Vec3> MagArrayGlobalModel::sensor_world_positions(
    const FilterState& state) const {
  const Vec3 p = state.seg("p");
  const Mat3 rot = rotation_matrix(state.quat("q"));
  std::vector<Vec3> pts(geometry_.positions.size());
  for (size_t i = 0; i < pts.size(); ++i) {
    pts[i] = p + rot * geometry_.positions[i];
  }
  return pts;
}

Eigen::VectorXd MagArrayGlobalModel::predict(const FilterState& state) const {
  const auto pts = sensor_world_positions(state);
  const Mat3 rot_t = rotation_matrix(state.quat("q")).transpose();
  Eigen::Matrix3Xd fields;
  out_of_domain_count_ +=
      field_batch(*domain_, state.seg("eta"), pts, backend_, fields);
  Eigen::VectorXd out(dim());
  for (int i = 0; i < geometry_.size(); ++i) {
    out.segment<3>(3 * i) = rot_t * fields.col(i);
  }
  return out;
}

Eigen::MatrixXd MagArrayGlobalModel::jacobian(const FilterState& state) const {
  const auto pts = sensor_world_positions(state);
  const Mat3 rot = rotation_matrix(state.quat("q"));
  const Mat3 rot_t = rot.transpose();
  const Eigen::VectorXd eta = state.seg("eta");

  Eigen::MatrixXd reg;
  field_regressor_batch(*domain_, pts, backend_, reg);
  std::vector<Mat3> jac;
  field_jacobian_batch(*domain_, eta, pts, backend_, jac);

  const auto& bp = state.layout->block("p");
  const auto& bq = state.layout->block("q");
  const auto& be = state.layout->block("eta");

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), state.layout->tangent_dim());
  for (int i = 0; i < geometry_.size(); ++i) {
    const Vec3 field_nav = reg.middleRows<3>(3 * i) * eta;
    const Vec3 field_body = rot_t * field_nav;
    h.block<3, 3>(3 * i, bp.tangent_offset) = rot_t * jac[i];
    h.block<3, 3>(3 * i, bq.tangent_offset) =
        skew(field_body) - rot_t * jac[i] * rot * skew(geometry_.positions[i]);
    h.block(3 * i, be.tangent_offset, 3, be.tangent_dim) =
        rot_t * reg.middleRows<3>(3 * i);
  }
  return h;
}

Eigen::MatrixXd MagArrayGlobalModel::noise(const FilterState&) const {
  return sigma_mag_ * sigma_mag_ * Eigen::MatrixXd::Identity(dim(), dim());
}

MagArrayFusedModel::MagArrayFusedModel(const ArrayGeometry& geometry,
                                       const GpDomain& domain, double sigma_mag,
                                       KernelBackend backend)
    : geometry_(geometry), domain_(&domain), sigma_mag_(sigma_mag),
      backend_(backend) {
  geometry_.validate();
  phi_diff_stack_.resize(3 * geometry_.size(), kLocalCoeffCount);
  const LocalRegressor phi0 = local_regressor(Vec3::Zero());
  for (int i = 0; i < geometry_.size(); ++i) {
    phi_diff_stack_.middleRows<3>(3 * i) =
        local_regressor(geometry_.positions[i]) - phi0;
  }
}

Eigen::VectorXd MagArrayFusedModel::predict(const FilterState& state) const {
  const Vec3 p = state.seg("p");
  const Mat3 rot_t = rotation_matrix(state.quat("q")).transpose();
  bool outside = false;
  const Vec3 center_body =
      rot_t * evaluate_global_field(*domain_, state.seg("eta"), p, &outside);
  if (outside) ++out_of_domain_count_;

  const LocalCoeffs theta = state.seg("theta");
  const Mat3 grad = local_field_gradient(theta);
  Eigen::VectorXd out(dim());
  for (int i = 0; i < geometry_.size(); ++i) {
    out.segment<3>(3 * i) = center_body + grad * geometry_.positions[i];
  }
  return out;
}

Eigen::VectorXd MagArrayFusedModel::predict_expanded(
    const FilterState& state) const {
  const Vec3 p = state.seg("p");
  const Mat3 rot_t = rotation_matrix(state.quat("q")).transpose();
  const Vec3 center_body =
      rot_t * evaluate_global_field(*domain_, state.seg("eta"), p);
  Eigen::VectorXd out = phi_diff_stack_ * state.seg("theta");
  for (int i = 0; i < geometry_.size(); ++i) {
    out.segment<3>(3 * i) += center_body;
  }
  return out;
}

Eigen::MatrixXd MagArrayFusedModel::jacobian(const FilterState& state) const {
  const Vec3 p = state.seg("p");
  const Mat3 rot = rotation_matrix(state.quat("q"));
  const Mat3 rot_t = rot.transpose();
  const Eigen::VectorXd eta = state.seg("eta");

  const Eigen::MatrixXd reg = field_regressor(*domain_, p);
  const Vec3 field_body = rot_t * (reg * eta);
  const Mat3 jac_pos = rot_t * global_field_jacobian(*domain_, eta, p);
  const Mat3 att_block = skew(field_body);
  const Eigen::MatrixXd eta_block = rot_t * reg;

  const auto& bp = state.layout->block("p");
  const auto& bq = state.layout->block("q");
  const auto& bth = state.layout->block("theta");
  const auto& be = state.layout->block("eta");

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), state.layout->tangent_dim());
  for (int i = 0; i < geometry_.size(); ++i) {
    h.block<3, 3>(3 * i, bp.tangent_offset) = jac_pos;
    h.block<3, 3>(3 * i, bq.tangent_offset) = att_block;
    h.middleRows<3>(3 * i).middleCols<8>(bth.tangent_offset) =
        phi_diff_stack_.middleRows<3>(3 * i);
    h.block(3 * i, be.tangent_offset, 3, be.tangent_dim) = eta_block;
  }
  return h;
}

Eigen::MatrixXd MagArrayFusedModel::noise(const FilterState&) const {
  return sigma_mag_ * sigma_mag_ * Eigen::MatrixXd::Identity(dim(), dim());
}

Eigen::VectorXd BaroModel::predict(const FilterState& state) const {
  Eigen::VectorXd y(1);
  y(0) = state.seg("p")(2);
  return y;
}

Eigen::MatrixXd BaroModel::jacobian(const FilterState& state) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(1, state.layout->tangent_dim());
  h(0, state.layout->block("p").tangent_offset + 2) = 1.0;
  return h;
}

Eigen::MatrixXd BaroModel::noise(const FilterState&) const {
  Eigen::MatrixXd r(1, 1);
  r(0, 0) = sigma_baro_ * sigma_baro_;
  return r;
}

Eigen::VectorXd PoseFixModel::pack(const PoseFixSample& fix) {
  Eigen::VectorXd y(7);
  y << fix.p, fix.q.w(), fix.q.x(), fix.q.y(), fix.q.z();
  return y;
}

Eigen::VectorXd PoseFixModel::predict(const FilterState& state) const {
  const Quat q = state.quat("q");
  Eigen::VectorXd y(7);
  y << state.seg("p"), q.w(), q.x(), q.y(), q.z();
  return y;
}

Eigen::VectorXd PoseFixModel::residual(const FilterState& state,
                                       const Eigen::VectorXd& y) const {
  Eigen::VectorXd r(6);
  r.head<3>() = y.head<3>() - state.seg("p");
  const Quat q_meas(y(3), y(4), y(5), y(6));
  r.tail<3>() = error_difference(state.quat("q"), q_meas);
  return r;
}

Eigen::MatrixXd PoseFixModel::jacobian(const FilterState& state) const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(6, state.layout->tangent_dim());
  h.block<3, 3>(0, state.layout->block("p").tangent_offset) = Mat3::Identity();
  h.block<3, 3>(3, state.layout->block("q").tangent_offset) = Mat3::Identity();
  return h;
}

Eigen::MatrixXd PoseFixModel::noise(const FilterState&) const {
  Eigen::VectorXd d(6);
  d.head<3>().setConstant(sigma_pos_ * sigma_pos_);
  d.tail<3>().setConstant(sigma_att_ * sigma_att_);
  return d.asDiagonal();
}

}  // namespace magnav
