#include <doctest.h>

#include <memory>

#include "magnav/jacobian_check.hpp"
#include "magnav/measurement_models.hpp"
#include "magnav/rng.hpp"

using namespace magnav;

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

std::shared_ptr<StateLayout> slam_layout(int eta_dim) {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("p", 3);
  layout->add_quaternion("q");
  layout->add_linear("eta", eta_dim);
  return layout;
}

Eigen::VectorXd random_eta(const GpDomain& domain, Rng& rng) {
  const Eigen::VectorXd lam = prior_covariance_diagonal(domain);
  Eigen::VectorXd eta(domain.coeff_dim());
  for (int i = 0; i < eta.size(); ++i) eta(i) = std::sqrt(lam(i)) * rng.normal();
  return eta;
}

}  // namespace

TEST_CASE("local-model array measurement") {
  const ArrayGeometry geom = ArrayGeometry::default_board();
  const MagArrayLocalModel model(geom, 0.5);
  auto state = make_state(tight_layout(4));

  SUBCASE("uniform field predicts the same value everywhere") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
    theta.head<3>() << 7.0, -3.0, 11.0;
    state.seg("theta") = theta;
    const Eigen::VectorXd pred = model.predict(state);
    for (int i = 0; i < geom.size(); ++i) {
      CHECK((pred.segment<3>(3 * i) - Vec3(7, -3, 11)).norm() == 0.0);
    }
  }

  SUBCASE("e8 field predicts (2rx, 0, -2rz)") {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(8);
    theta(7) = 1.0;
    state.seg("theta") = theta;
    const Eigen::VectorXd pred = model.predict(state);
    for (int i = 0; i < geom.size(); ++i) {
      const Vec3 r = geom.positions[i];
      CHECK((pred.segment<3>(3 * i) - Vec3(2 * r.x(), 0, -2 * r.z())).norm() <
            1e-15);
    }
  }

  SUBCASE("Jacobian is zero on INS blocks and passes finite differences") {
    Rng rng(71);
    state.seg("theta") = Eigen::VectorXd::Random(8) * 10;
    const Eigen::MatrixXd h = model.jacobian(state);
    CHECK(h.leftCols(15).cwiseAbs().maxCoeff() == 0.0);
    CHECK(check_measurement_jacobian(model, state).pass(1e-6));
  }
}

TEST_CASE("global-model array measurement (loose SLAM)") {
  const GpDomain domain(Vec3(3, 3, 1.5), 60, GpHyperparams{5.0, 5.0, 0.7});
  const ArrayGeometry geom = ArrayGeometry::default_board();
  const MagArrayGlobalModel model(geom, domain, 0.5);
  Rng rng(72);

  SUBCASE("single sensor at the body origin reduces to the plain SLAM model") {
    ArrayGeometry center;
    center.positions = {Vec3::Zero(), Vec3(0.1, 0, 0)};  // need 2 for validate
    const MagArrayGlobalModel m2(center, domain, 0.5);
    auto state = make_state(slam_layout(domain.coeff_dim()));
    state.seg("p") = Vec3(0.4, -0.2, 0.1);
    state.set_quat("q", error_inject(Quat::Identity(), Vec3(0.1, 0.2, -0.4)));
    state.seg("eta") = random_eta(domain, rng);
    const Eigen::VectorXd pred = m2.predict(state);
    const Mat3 rot_t = rotation_matrix(state.quat("q")).transpose();
    const Vec3 direct =
        rot_t * evaluate_global_field(domain, state.seg("eta"),
                                      Vec3(state.seg("p")));
    CHECK((pred.head<3>() - direct).norm() < 1e-12);
  }

  SUBCASE("linear-only field is attitude-dependent but position-free") {
    auto state = make_state(slam_layout(domain.coeff_dim()));
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(domain.coeff_dim());
    eta.head<3>() << 12.0, 5.0, -44.0;
    state.seg("eta") = eta;
    state.set_quat("q", error_inject(Quat::Identity(), Vec3(0.3, -0.2, 0.9)));
    const Eigen::VectorXd pred = model.predict(state);
    const Vec3 expected =
        rotation_matrix(state.quat("q")).transpose() * Vec3(12, 5, -44);
    for (int i = 0; i < geom.size(); ++i) {
      CHECK((pred.segment<3>(3 * i) - expected).norm() < 1e-10);
    }
  }

  SUBCASE("Jacobians pass finite differences at random states") {
    for (int trial = 0; trial < 20; ++trial) {
      auto state = make_state(slam_layout(domain.coeff_dim()));
      state.seg("p") = Vec3(2.0 * rng.normal(), 2.0 * rng.normal(),
                            0.6 * rng.normal());
      state.set_quat("q", error_inject(Quat::Identity(), rng.normal3()));
      state.seg("eta") = random_eta(domain, rng);
      const auto res = check_measurement_jacobian(model, state);
      INFO("trial ", trial, " err ", res.max_rel_error);
      CHECK(res.pass(1e-4));
    }
  }

  SUBCASE("out-of-domain evaluations are flagged") {
    auto state = make_state(slam_layout(domain.coeff_dim()));
    state.seg("p") = Vec3(10, 0, 0);
    state.seg("eta") = random_eta(domain, rng);
    model.predict(state);
    CHECK(model.out_of_domain_count() > 0);
  }
}

TEST_CASE("fused array measurement (tight SLAM)") {
  const GpDomain domain(Vec3(3, 3, 1.5), 50, GpHyperparams{5.0, 5.0, 0.7});
  const ArrayGeometry geom = ArrayGeometry::default_board();
  const MagArrayFusedModel model(geom, domain, 0.5);
  Rng rng(73);

  auto make_random_state = [&](Rng& r) {
    auto state = make_state(tight_layout(domain.coeff_dim()));
    state.seg("p") = Vec3(2.0 * r.normal(), 2.0 * r.normal(), 0.5 * r.normal());
    state.set_quat("q", error_inject(Quat::Identity(), r.normal3()));
    Eigen::VectorXd theta(8);
    for (int i = 0; i < 8; ++i) theta(i) = 5.0 * r.normal();
    state.seg("theta") = theta;
    state.seg("eta") = random_eta(domain, r);
    return state;
  };

  SUBCASE("center sensor sees the pure global prediction") {
    ArrayGeometry with_center;
    with_center.positions = {Vec3::Zero(), Vec3(0.1, 0.05, 0)};
    const MagArrayFusedModel m2(with_center, domain, 0.5);
    const auto state = make_random_state(rng);
    const Eigen::VectorXd pred = m2.predict(state);
    const Vec3 global = rotation_matrix(state.quat("q")).transpose() *
                        evaluate_global_field(domain, state.seg("eta"),
                                              Vec3(state.seg("p")));
    CHECK((pred.head<3>() - global).norm() < 1e-12);
  }

  SUBCASE("theta-only state predicts grad(theta) r") {
    auto state = make_state(tight_layout(domain.coeff_dim()));
    Eigen::VectorXd theta(8);
    for (int i = 0; i < 8; ++i) theta(i) = rng.normal();
    state.seg("theta") = theta;
    const Eigen::VectorXd pred = model.predict(state);
    const Mat3 grad = local_field_gradient(theta);
    for (int i = 0; i < geom.size(); ++i) {
      CHECK((pred.segment<3>(3 * i) - grad * geom.positions[i]).norm() < 1e-12);
    }
  }

  SUBCASE("compact and expanded forms agree to machine precision") {
    for (int trial = 0; trial < 50; ++trial) {
      const auto state = make_random_state(rng);
      const Eigen::VectorXd a = model.predict(state);
      const Eigen::VectorXd b = model.predict_expanded(state);
      CHECK((a - b).cwiseAbs().maxCoeff() <
            1e-12 * (1.0 + a.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("Jacobians pass finite differences at random states") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto state = make_random_state(rng);
      const auto res = check_measurement_jacobian(model, state);
      INFO("trial ", trial, " err ", res.max_rel_error);
      CHECK(res.pass(1e-4));
    }
  }
}

TEST_CASE("barometer model") {
  const BaroModel model(0.1);
  auto state = make_state(slam_layout(4));
  state.seg("p") = Vec3(5, -2, 3);
  CHECK(model.predict(state)(0) == 3.0);

  state.cov = Eigen::MatrixXd::Identity(10, 10);
  Eigen::VectorXd y(1);
  y(0) = 3.0;  // equals prediction: altitude stays put
  eskf_update(state, model, y);
  CHECK(state.seg("p")(2) == doctest::Approx(3.0).epsilon(1e-12));

  CHECK(check_measurement_jacobian(model, state).pass(1e-8));
}

TEST_CASE("pose fix model") {
  Rng rng(74);
  const PoseFixModel model(0.01, 0.01);
  auto state = make_state(slam_layout(4));
  state.seg("p") = rng.normal3();
  state.set_quat("q", error_inject(Quat::Identity(), rng.normal3()));

  PoseFixSample fix;
  fix.p = Vec3(state.seg("p")) + Vec3(0.01, -0.02, 0.005);
  fix.q = error_inject(state.quat("q"), Vec3(0.01, 0.005, -0.02));
  const Eigen::VectorXd r = model.residual(state, PoseFixModel::pack(fix));
  CHECK((r.head<3>() - Vec3(0.01, -0.02, 0.005)).norm() < 1e-12);
  CHECK((r.tail<3>() - Vec3(0.01, 0.005, -0.02)).norm() < 1e-10);

  CHECK(check_measurement_jacobian(model, state).pass(1e-6));
}
