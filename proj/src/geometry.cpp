#include "magnav/geometry.hpp"

#include <cmath>

namespace magnav {

namespace {
constexpr double kRenormThreshold = 1e-6;
// Below this angle the trig ratios are replaced by their series expansions.
constexpr double kSmallAngle = 1e-8;
}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_matrix(const Quat& q) { return q.toRotationMatrix(); }

Quat quat_multiply(const Quat& a, const Quat& b) {
  Quat r = a * b;
  if (std::abs(r.squaredNorm() - 1.0) > kRenormThreshold) {
    r.normalize();
  }
  return r;
}

Quat quat_conjugate(const Quat& q) { return q.conjugate(); }

Quat quat_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  const double half = 0.5 * angle;
  double scale;
  if (angle < kSmallAngle) {
    scale = 0.5 - half * half / 12.0;
  } else {
    scale = std::sin(half) / angle;
  }
  const Vec3 xyz = scale * rotvec;
  return Quat(std::cos(half), xyz.x(), xyz.y(), xyz.z());
}

Vec3 quat_log(const Quat& q) {
  Quat u = q;
  if (u.w() < 0.0) {
    u.coeffs() = -u.coeffs();
  }
  const Vec3 v(u.x(), u.y(), u.z());
  const double sin_half = v.norm();
  const double cos_half = u.w();
  if (sin_half < kSmallAngle) {
    return 2.0 / cos_half * v;
  }
  const double angle = 2.0 * std::atan2(sin_half, cos_half);
  return (angle / sin_half) * v;
}

Quat error_inject(const Quat& q, const Vec3& delta) {
  return quat_multiply(q, quat_exp(delta));
}

Vec3 error_difference(const Quat& ref, const Quat& q) {
  return quat_log(ref.conjugate() * q);
}

Mat3 so3_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  const Mat3 k = skew(rotvec);
  if (angle < kSmallAngle) {
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

Mat3 so3_right_jacobian(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  const Mat3 k = skew(rotvec);
  if (angle < kSmallAngle) {
    return Mat3::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  }
  const double a2 = angle * angle;
  const double b = (1.0 - std::cos(angle)) / a2;
  const double c = (angle - std::sin(angle)) / (a2 * angle);
  return Mat3::Identity() - b * k + c * k * k;
}

}  // namespace magnav
