#include <doctest.h>

#include "magnav/geometry.hpp"
#include "magnav/local_field.hpp"
#include "magnav/rng.hpp"

using namespace magnav;

namespace {

// Degree-2 scalar potential whose gradient is the degree-1 field model.
// Independent oracle: the field must equal the numerical gradient of this.
double potential(const LocalCoeffs& t, const Vec3& r) {
  const double x = r.x(), y = r.y(), z = r.z();
  return t(0) * x + t(1) * y + t(2) * z + t(3) * y * z +
         t(4) * (y * y - z * z) + t(5) * x * z + t(6) * x * y +
         t(7) * (x * x - z * z);
}

Vec3 numeric_gradient(const LocalCoeffs& t, const Vec3& r, double h = 1e-5) {
  Vec3 g;
  for (int d = 0; d < 3; ++d) {
    Vec3 rp = r, rm = r;
    rp(d) += h;
    rm(d) -= h;
    g(d) = (potential(t, rp) - potential(t, rm)) / (2 * h);
  }
  return g;
}

LocalCoeffs random_coeffs(Rng& rng, double scale = 10.0) {
  LocalCoeffs t;
  for (int i = 0; i < 8; ++i) t(i) = scale * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("coefficient count formula") {
  CHECK(local_coeff_count(1) == 8);
  CHECK(local_coeff_count(0) == 3);
  CHECK(local_coeff_count(2) == 15);
  CHECK(static_cast<int>(LocalCoeffs::RowsAtCompileTime) == local_coeff_count(1));
}

TEST_CASE("regressor at reference points") {
  const LocalRegressor at_zero = local_regressor(Vec3::Zero());
  CHECK((at_zero.leftCols<3>() - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(at_zero.rightCols<5>().cwiseAbs().maxCoeff() == 0.0);

  const LocalRegressor at_x = local_regressor(Vec3(1, 0, 0));
  Eigen::Matrix<double, 3, 8> expected;
  expected << 1, 0, 0, 0, 0, 0, 0, 2,
              0, 1, 0, 0, 0, 0, 1, 0,
              0, 0, 1, 0, 0, 1, 0, 0;
  CHECK((at_x - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("field evaluation") {
  Rng rng(21);
  LocalCoeffs constant = LocalCoeffs::Zero();
  constant.head<3>() << 4.0, -2.0, 7.5;
  CHECK((evaluate_local_field(constant, 10.0 * rng.normal3()) -
         Vec3(4.0, -2.0, 7.5)).norm() < 1e-12);

  LocalCoeffs e8 = LocalCoeffs::Zero();
  e8(7) = 1.0;
  CHECK((evaluate_local_field(e8, Vec3(1, 0, 0)) - Vec3(2, 0, 0)).norm() == 0.0);

  for (int i = 0; i < 100; ++i) {
    const LocalCoeffs t = random_coeffs(rng);
    const Vec3 r = 0.2 * rng.normal3();
    CHECK((evaluate_local_field(t, r) - numeric_gradient(t, r)).norm() < 1e-6);
  }
}

TEST_CASE("field gradient structure") {
  Rng rng(22);
  CHECK(local_field_gradient(LocalCoeffs::Zero()).cwiseAbs().maxCoeff() == 0.0);

  LocalCoeffs e8 = LocalCoeffs::Zero();
  e8(7) = 1.0;
  const Mat3 g8 = local_field_gradient(e8);
  CHECK((g8 - Vec3(2, 0, -2).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() ==
        0.0);

  for (int i = 0; i < 1000; ++i) {
    const LocalCoeffs t = random_coeffs(rng);
    const Mat3 g = local_field_gradient(t);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Left-to-right summation cancels exactly; Eigen's trace() may reorder.
    CHECK(g(0, 0) + g(1, 1) + g(2, 2) == 0.0);
    const Vec3 r = rng.normal3();
    const Vec3 lhs = (local_regressor(r) - local_regressor(Vec3::Zero())) * t;
    CHECK((lhs - g * r).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("pack_gradient inverts gradient assembly") {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const LocalCoeffs t = random_coeffs(rng);
    const GradientPack p = pack_gradient(local_field_gradient(t));
    CHECK((p - t.tail<5>()).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("divergence and curl vanish") {
  Rng rng(24);
  const double h = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const LocalCoeffs t = random_coeffs(rng);
    const Vec3 r = 0.3 * rng.normal3();
    Mat3 jac;
    for (int d = 0; d < 3; ++d) {
      Vec3 rp = r, rm = r;
      rp(d) += h;
      rm(d) -= h;
      jac.col(d) =
          (evaluate_local_field(t, rp) - evaluate_local_field(t, rm)) / (2 * h);
    }
    CHECK(std::abs(jac.trace()) < 1e-6);                        // divergence
    CHECK((jac - jac.transpose()).cwiseAbs().maxCoeff() < 1e-6);  // curl
    CHECK((jac - local_field_gradient(t)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("coefficient transport") {
  Rng rng(25);

  SUBCASE("identity motion is a fixed point") {
    const LocalCoeffs t = random_coeffs(rng);
    const LocalCoeffs moved =
        transport_local_coeffs(t, Quat::Identity(), Vec3::Zero());
    CHECK((moved - t).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("pure translation of the e8 field") {
    LocalCoeffs e8 = LocalCoeffs::Zero();
    e8(7) = 1.0;
    const Vec3 d(0.3, -0.2, 0.5);
    const LocalCoeffs moved = transport_local_coeffs(e8, Quat::Identity(), d);
    CHECK((moved.head<3>() - Vec3(2 * d.x(), 0, -2 * d.z())).norm() < 1e-15);
    CHECK((moved.tail<5>() - e8.tail<5>()).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("two-frame evaluation agrees") {
    for (int i = 0; i < 200; ++i) {
      const LocalCoeffs t = random_coeffs(rng);
      Quat dq(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      dq.normalize();
      const Vec3 dp = 0.5 * rng.normal3();
      const LocalCoeffs moved = transport_local_coeffs(t, dq, dp);
      const Vec3 r_new = 0.3 * rng.normal3();
      const Mat3 rot = rotation_matrix(dq);
      const Vec3 via_old =
          rot.transpose() * evaluate_local_field(t, dp + rot * r_new);
      CHECK((evaluate_local_field(moved, r_new) - via_old).norm() < 1e-10);
    }
  }

  SUBCASE("round trip through the inverse motion") {
    for (int i = 0; i < 100; ++i) {
      const LocalCoeffs t = random_coeffs(rng);
      Quat dq(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      dq.normalize();
      const Vec3 dp = 0.5 * rng.normal3();
      const LocalCoeffs there = transport_local_coeffs(t, dq, dp);
      const LocalCoeffs back = transport_local_coeffs(
          there, quat_conjugate(dq), -(rotation_matrix(dq).transpose() * dp));
      CHECK((back - t).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + t.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("transport matrix reproduces transport") {
    for (int i = 0; i < 50; ++i) {
      const LocalCoeffs t = random_coeffs(rng);
      Quat dq(rng.normal(), rng.normal(), rng.normal(), rng.normal());
      dq.normalize();
      const Vec3 dp = 0.5 * rng.normal3();
      const LocalCoeffs direct = transport_local_coeffs(t, dq, dp);
      const LocalCoeffs via_matrix = transport_matrix(dq, dp) * t;
      CHECK((direct - via_matrix).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("least-squares fit recovers the generating coefficients") {
  Rng rng(26);
  const LocalCoeffs truth = random_coeffs(rng);
  std::vector<Vec3> positions;
  Eigen::VectorXd fields(3 * 12);
  for (int i = 0; i < 12; ++i) {
    const Vec3 r(0.17 * rng.normal(), 0.12 * rng.normal(), 0.02 * rng.normal());
    positions.push_back(r);
    fields.segment<3>(3 * i) = evaluate_local_field(truth, r);
  }
  const LocalCoeffs fit = fit_local_coeffs(positions, fields);
  CHECK((fit - truth).cwiseAbs().maxCoeff() < 1e-8);
}
