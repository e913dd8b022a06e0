#pragma once

#include <Eigen/Core>

#include "magnav/basis_kernels.hpp"
#include "magnav/eskf.hpp"
#include "magnav/global_field.hpp"
#include "magnav/local_field.hpp"
#include "magnav/nav_types.hpp"

namespace magnav {

// Magnetometer-array measurement against the local polynomial model: sensor i
// predicts Phi(r_i) theta. Jacobian is zero on the INS blocks.
class MagArrayLocalModel final : public MeasurementModel {
 public:
  MagArrayLocalModel(const ArrayGeometry& geometry, double sigma_mag);

  std::string name() const override { return "mag_array_local"; }
  int dim() const override { return 3 * geometry_.size(); }
  Eigen::VectorXd predict(const FilterState& state) const override;
  Eigen::MatrixXd jacobian(const FilterState& state) const override;
  Eigen::MatrixXd noise(const FilterState& state) const override;

  const ArrayGeometry& geometry() const { return geometry_; }

 private:
  ArrayGeometry geometry_;
  Eigen::MatrixXd phi_stack_;  // 3N x 8, fixed by the geometry
  double sigma_mag_;
};

// Magnetometer-array measurement against the global reduced-rank model
// (loosely coupled SLAM stage): sensor i predicts
//   R^T gradPsi(p + R r_i) eta.
// Flags (but does not reject) evaluations outside the GP domain.
class MagArrayGlobalModel final : public MeasurementModel {
 public:
  MagArrayGlobalModel(const ArrayGeometry& geometry, const GpDomain& domain,
                      double sigma_mag,
                      KernelBackend backend = KernelBackend::kOpenMp);

  std::string name() const override { return "mag_array_global"; }
  int dim() const override { return 3 * geometry_.size(); }
  Eigen::VectorXd predict(const FilterState& state) const override;
  Eigen::MatrixXd jacobian(const FilterState& state) const override;
  Eigen::MatrixXd noise(const FilterState& state) const override;

  int out_of_domain_count() const { return out_of_domain_count_; }

 private:
  std::vector<Vec3> sensor_world_positions(const FilterState& state) const;

  ArrayGeometry geometry_;
  const GpDomain* domain_;
  double sigma_mag_;
  KernelBackend backend_;
  mutable int out_of_domain_count_ = 0;
};

// Fused measurement of the tightly coupled system: global field at the array
// center plus the local gradient variation,
//   h_i = R^T gradPsi(p) eta + grad(theta) r_i.
class MagArrayFusedModel final : public MeasurementModel {
 public:
  MagArrayFusedModel(const ArrayGeometry& geometry, const GpDomain& domain,
                     double sigma_mag,
                     KernelBackend backend = KernelBackend::kOpenMp);

  std::string name() const override { return "mag_array_fused"; }
  int dim() const override { return 3 * geometry_.size(); }
  Eigen::VectorXd predict(const FilterState& state) const override;
  Eigen::MatrixXd jacobian(const FilterState& state) const override;
  Eigen::MatrixXd noise(const FilterState& state) const override;

  // Expanded-form prediction via (Phi(r_i) - Phi(0)) theta for the local
  // term; equal to predict() to machine precision.
  Eigen::VectorXd predict_expanded(const FilterState& state) const;

  int out_of_domain_count() const { return out_of_domain_count_; }

 private:
  ArrayGeometry geometry_;
  const GpDomain* domain_;
  Eigen::MatrixXd phi_diff_stack_;  // 3N x 8 of Phi(r_i) - Phi(0)
  double sigma_mag_;
  KernelBackend backend_;
  mutable int out_of_domain_count_ = 0;
};

// Barometer altitude: scalar p_z.
class BaroModel final : public MeasurementModel {
 public:
  explicit BaroModel(double sigma_baro) : sigma_baro_(sigma_baro) {}

  std::string name() const override { return "baro"; }
  int dim() const override { return 1; }
  Eigen::VectorXd predict(const FilterState& state) const override;
  Eigen::MatrixXd jacobian(const FilterState& state) const override;
  Eigen::MatrixXd noise(const FilterState& state) const override;

 private:
  double sigma_baro_;
};

// Pose fix (motion capture): position plus attitude, y = [p, q_wxyz].
// Attitude residual is the right-side rotation-vector difference.
class PoseFixModel final : public MeasurementModel {
 public:
  PoseFixModel(double sigma_pos, double sigma_att)
      : sigma_pos_(sigma_pos), sigma_att_(sigma_att) {}

  std::string name() const override { return "pose_fix"; }
  int dim() const override { return 6; }
  Eigen::VectorXd predict(const FilterState& state) const override;
  Eigen::VectorXd residual(const FilterState& state,
                           const Eigen::VectorXd& y) const override;
  Eigen::MatrixXd jacobian(const FilterState& state) const override;
  Eigen::MatrixXd noise(const FilterState& state) const override;

  static Eigen::VectorXd pack(const PoseFixSample& fix);

 private:
  double sigma_pos_;
  double sigma_att_;
};

}  // namespace magnav
