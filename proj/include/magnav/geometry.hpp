#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace magnav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Attitude conventions used by every filter in this project:
//
//  * Quaternions are Hamilton, scalar-first in all I/O, and rotate body-frame
//    vectors into the navigation frame (passive body-to-nav).
//  * Attitude error states are rotation vectors in the BODY frame attached on
//    the right:  q_true = q_hat ⊗ exp_quat(delta),  R_true = R_hat * Exp(delta).
//    This is the local perturbation convention; the odometry covariance
//    transform and all measurement Jacobians assume it.

Mat3 skew(const Vec3& v);

// Rotation matrix of a unit quaternion.
Mat3 rotation_matrix(const Quat& q);

// Renormalizes when accumulated drift exceeds 1e-6.
Quat quat_multiply(const Quat& a, const Quat& b);

Quat quat_conjugate(const Quat& q);

// exp: rotation vector (radians) -> unit quaternion. Safe for |v| -> 0.
Quat quat_exp(const Vec3& rotvec);

// log: unit quaternion -> rotation vector, shortest arc (|result| <= pi).
// q and -q give the same result.
Vec3 quat_log(const Quat& q);

// Right-multiplicative error retraction: q ⊗ exp(delta).
Quat error_inject(const Quat& q, const Vec3& delta);

// Inverse retraction: log(ref^* ⊗ q), so error_difference(q, error_inject(q, d)) == d.
Vec3 error_difference(const Quat& ref, const Quat& q);

// Exp map on SO(3).
Mat3 so3_exp(const Vec3& rotvec);

// Right Jacobian of SO(3): Exp(v + dv) ≈ Exp(v) Exp(J_r(v) dv).
Mat3 so3_right_jacobian(const Vec3& rotvec);

}  // namespace magnav
