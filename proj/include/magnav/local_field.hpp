#pragma once

#include <Eigen/Core>
#include <span>

#include "magnav/geometry.hpp"

namespace magnav {

// First-degree polynomial field model over the magnetometer-array footprint.
// The field is affine in position: M(r) = m0 + G r, where G is symmetric with
// zero trace (curl-free and divergence-free). Eight coefficients:
//   theta(0..2)  mean field at the array origin [uT]
//   theta(3..7)  the five free entries of G      [uT/m]

inline constexpr int kLocalCoeffCount = 8;

using LocalCoeffs = Eigen::Matrix<double, 8, 1>;
using LocalRegressor = Eigen::Matrix<double, 3, 8>;
using GradientPack = Eigen::Matrix<double, 5, 1>;

// Coefficient count p = n^2 + 4n + 3 of the degree-n model. Validation only;
// everything else in this module is fixed at n = 1.
int local_coeff_count(int degree);

// 3x8 regressor so that M(r) = local_regressor(r) * theta.
LocalRegressor local_regressor(const Vec3& r);

Vec3 evaluate_local_field(const LocalCoeffs& theta, const Vec3& r);

// Spatial gradient dM/dr. Symmetric and trace-free by construction.
Mat3 local_field_gradient(const LocalCoeffs& theta);

// Pack a symmetric trace-free matrix into theta(3..7); inverse of
// local_field_gradient on its image.
GradientPack pack_gradient(const Mat3& g);

// Re-expresses theta in a body frame displaced by dp_body and rotated by dq
// (both given in the old body frame):
//   m0' = R(dq)^T (m0 + G dp_body),   G' = R(dq)^T G R(dq).
LocalCoeffs transport_local_coeffs(const LocalCoeffs& theta, const Quat& dq,
                                   const Vec3& dp_body);

// The 8x8 matrix of the (linear) transport above: theta' = T theta.
Eigen::Matrix<double, 8, 8> transport_matrix(const Quat& dq, const Vec3& dp_body);

// Least-squares fit of theta to field samples y_i taken at positions r_i.
// Needs at least 8 rows of independent regressors (3 per sample).
LocalCoeffs fit_local_coeffs(std::span<const Vec3> positions,
                             const Eigen::VectorXd& stacked_fields);

}  // namespace magnav
