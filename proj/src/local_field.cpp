#include "magnav/local_field.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace magnav {

int local_coeff_count(int degree) {
  if (degree < 0) {
    throw std::invalid_argument("local_coeff_count: degree must be >= 0");
  }
  return degree * degree + 4 * degree + 3;
}

LocalRegressor local_regressor(const Vec3& r) {
  const double x = r.x(), y = r.y(), z = r.z();
  LocalRegressor phi;
  phi << 1, 0, 0, 0, 0, z, y, 2 * x,
         0, 1, 0, z, 2 * y, 0, x, 0,
         0, 0, 1, y, -2 * z, x, 0, -2 * z;
  return phi;
}

Vec3 evaluate_local_field(const LocalCoeffs& theta, const Vec3& r) {
  return local_regressor(r) * theta;
}

Mat3 local_field_gradient(const LocalCoeffs& theta) {
  const double t4 = theta(3), t5 = theta(4), t6 = theta(5), t7 = theta(6),
               t8 = theta(7);
  Mat3 g;
  g << 2 * t8, t7, t6,
       t7, 2 * t5, t4,
       t6, t4, -2 * (t8 + t5);
  return g;
}

GradientPack pack_gradient(const Mat3& g) {
  GradientPack p;
  p << g(1, 2), 0.5 * g(1, 1), g(0, 2), g(0, 1), 0.5 * g(0, 0);
  return p;
}

LocalCoeffs transport_local_coeffs(const LocalCoeffs& theta, const Quat& dq,
                                   const Vec3& dp_body) {
  const Mat3 rot = rotation_matrix(dq);
  const Mat3 g = local_field_gradient(theta);
  const Vec3 m0 = rot.transpose() * (theta.head<3>() + g * dp_body);
  const Mat3 g_new = rot.transpose() * g * rot;
  LocalCoeffs out;
  out.head<3>() = m0;
  out.tail<5>() = pack_gradient(g_new);
  return out;
}

Eigen::Matrix<double, 8, 8> transport_matrix(const Quat& dq, const Vec3& dp_body) {
  Eigen::Matrix<double, 8, 8> t;
  for (int j = 0; j < 8; ++j) {
    LocalCoeffs basis = LocalCoeffs::Zero();
    basis(j) = 1.0;
    t.col(j) = transport_local_coeffs(basis, dq, dp_body);
  }
  return t;
}

LocalCoeffs fit_local_coeffs(std::span<const Vec3> positions,
                             const Eigen::VectorXd& stacked_fields) {
  const int n = static_cast<int>(positions.size());
  if (3 * n != stacked_fields.size()) {
    throw std::invalid_argument("fit_local_coeffs: size mismatch");
  }
  if (3 * n < kLocalCoeffCount) {
    throw std::invalid_argument("fit_local_coeffs: underdetermined fit");
  }
  Eigen::MatrixXd a(3 * n, kLocalCoeffCount);
  for (int i = 0; i < n; ++i) {
    a.middleRows<3>(3 * i) = local_regressor(positions[i]);
  }
  return a.colPivHouseholderQr().solve(stacked_fields);
}

}  // namespace magnav
