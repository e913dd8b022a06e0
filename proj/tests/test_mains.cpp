#include <doctest.h>

#include "magnav/errors.hpp"
#include "magnav/mains_filter.hpp"
#include "magnav/rng.hpp"
#include "magnav/sim.hpp"

using namespace magnav;

namespace {

struct Scenario {
  std::vector<SensorFrame> frames;
  std::vector<TrajectoryPoint> truth;
  NavState initial;
  GpHyperparams hp{20.0, 5.0, 0.7};
};

Scenario make_scenario(double duration, std::uint64_t seed, bool zero_noise,
                       int mag_decimation = 5) {
  Scenario sc;
  const auto spec = corridor_loop_spec(duration, 6.0, 4.0);
  const auto traj = synthesize_trajectory(spec);
  const GpDomain domain = domain_for_trajectory(traj, sc.hp, 90);
  const auto world = sample_world(domain, Rng::mix(seed, 77));
  SimNoise noise;
  noise.zero_noise = zero_noise;
  noise.mag_decimation = mag_decimation;
  auto out = synthesize_sensors(world, traj, ArrayGeometry::default_board(),
                                noise, seed);
  sc.frames = std::move(out.frames);
  sc.truth = std::move(out.truth);
  sc.initial = out.initial_state;
  return sc;
}

NavFilterConfig test_config() {
  NavFilterConfig cfg;
  cfg.mag_decimation = 5;  // matches the scenario's mag rate
  return cfg;
}

}  // namespace

TEST_CASE("static platform with exact sensors stays put") {
  TrajectorySpec still;
  still.waypoints.push_back({0.0, Vec3::Zero()});
  still.waypoints.push_back({60.0, Vec3::Zero()});
  const auto traj = synthesize_trajectory(still);
  const GpHyperparams hp{20.0, 5.0, 0.7};
  const GpDomain domain = domain_for_trajectory(traj, hp, 60);
  const auto world = sample_world(domain, 3);
  SimNoise noise;
  noise.zero_noise = true;
  noise.mag_decimation = 5;
  const auto out = synthesize_sensors(world, traj, ArrayGeometry::default_board(),
                                      noise, 3);

  NavFilterConfig cfg = test_config();
  cfg.use_fix = false;
  cfg.use_baro = false;
  const auto result = run_mains(out.frames, ArrayGeometry::default_board(), cfg);
  CHECK(result.final_state.p.norm() < 1e-6);
  CHECK(result.final_state.v.norm() < 1e-6);
}

TEST_CASE("with updates disabled the filter is exactly strapdown") {
  const Scenario sc = make_scenario(30.0, 101, false);
  NavFilterConfig cfg = test_config();
  cfg.use_mag = false;
  cfg.use_baro = false;
  cfg.use_fix = false;
  const auto filtered = run_mains(sc.frames, ArrayGeometry::default_board(), cfg);

  const NavState x0 = initial_state_estimate(sc.frames, 1.0);
  const auto dead = run_strapdown(sc.frames, x0, cfg.ins);

  REQUIRE(filtered.trajectory.size() == dead.size());
  for (size_t i = 0; i < dead.size(); i += 137) {
    CHECK(filtered.trajectory[i].p == dead[i].p);  // bitwise
    CHECK(filtered.trajectory[i].q.coeffs() == dead[i].q.coeffs());
  }
  CHECK(filtered.trajectory.back().p == dead.back().p);
}

TEST_CASE("array updates cut the drift by an order of magnitude") {
  const Scenario sc = make_scenario(60.0, 202, false);
  NavFilterConfig cfg = test_config();

  const auto with_mag = run_mains(sc.frames, ArrayGeometry::default_board(), cfg);

  NavFilterConfig cfg_ins = cfg;
  cfg_ins.use_mag = false;
  const auto ins_only = run_mains(sc.frames, ArrayGeometry::default_board(), cfg_ins);

  const Vec3 truth_end = sc.truth.back().p;
  const double err_mag =
      (with_mag.trajectory.back().p - truth_end).head<2>().norm();
  const double err_ins =
      (ins_only.trajectory.back().p - truth_end).head<2>().norm();
  INFO("mains ", err_mag, " ins ", err_ins);
  CHECK(err_mag * 10.0 <= err_ins);
  CHECK(with_mag.mag_updates > 0);
}

TEST_CASE("odometry increments compose to the filter pose change") {
  const Scenario sc = make_scenario(30.0, 303, false);
  const auto result = run_mains(sc.frames, ArrayGeometry::default_board(),
                                test_config());
  REQUIRE(result.increments.size() > 10);

  // Each increment spans exactly K propagation steps.
  for (const auto& inc : result.increments) {
    CHECK(inc.step_end - inc.step_start == test_config().clone_interval);
  }

  // Composing increments reproduces the per-epoch filter poses. The filter
  // trajectory rows are the posterior at each step; increment (i, j) maps the
  // posterior at i (as smoothed at j) to the posterior at j, so the
  // composition telescopes along epochs.
  Vec3 p = result.increments.front().dp;  // relative to epoch-1 pose below
  const auto find_point = [&](int step) {
    return result.trajectory.at(step - 1);
  };
  const auto& first = result.increments.front();
  const Vec3 p_start = find_point(first.step_start).p;
  Quat q = find_point(first.step_start).q;
  Vec3 pos = p_start;
  for (const auto& inc : result.increments) {
    pos += inc.dp;
    q = quat_multiply(q, inc.dq);
  }
  const auto& last_pt = find_point(result.increments.back().step_end);
  CHECK((pos - last_pt.p).norm() < 1e-9);
  CHECK(error_difference(q, last_pt.q).norm() < 1e-9);
}

TEST_CASE("increment covariance is symmetric PSD and shrinks with updates") {
  const Scenario sc = make_scenario(20.0, 404, false);
  const auto result = run_mains(sc.frames, ArrayGeometry::default_board(),
                                test_config());
  REQUIRE_FALSE(result.increments.empty());
  for (const auto& inc : result.increments) {
    const Eigen::Matrix<double, 6, 6> c = inc.cov;
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(c);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("theta after one diffuse update matches the frame regression") {
  const Scenario sc = make_scenario(20.0, 505, false, 1);
  // Find the first two mag frames.
  const ArrayGeometry geom = ArrayGeometry::default_board();
  NavFilterConfig cfg;
  cfg.mag_decimation = 1;
  cfg.use_baro = false;
  cfg.use_fix = false;
  MainsFilter filter(geom, cfg);
  filter.initialize(sc.initial, sc.frames.front().t);

  int seen = 0;
  for (const auto& frame : sc.frames) {
    filter.process(frame);
    if (frame.mag) {
      ++seen;
      const LocalCoeffs regression =
          fit_local_coeffs(geom.positions, *frame.mag);
      if (seen == 1) {
        // Initialization is exactly the least-squares fit.
        CHECK((filter.theta() - regression).cwiseAbs().maxCoeff() < 1e-10);
      } else {
        // Prior is still nearly diffuse relative to the measurement, so the
        // posterior tracks the per-frame regression closely.
        const Eigen::VectorXd pred_filter =
            Eigen::MatrixXd(local_regressor(geom.positions[7])) * filter.theta();
        const Eigen::VectorXd pred_reg =
            Eigen::MatrixXd(local_regressor(geom.positions[7])) * regression;
        CHECK((pred_filter - pred_reg).cwiseAbs().maxCoeff() < 0.5);
        break;
      }
    }
  }
  CHECK(seen >= 2);
}

TEST_CASE("gap detection") {
  Scenario sc = make_scenario(20.0, 606, true);
  // Remove 1 s of frames to force a gap.
  std::vector<SensorFrame> gappy;
  for (const auto& f : sc.frames) {
    if (f.t > 10.0 && f.t < 11.0) continue;
    gappy.push_back(f);
  }
  CHECK_THROWS_AS(run_mains(gappy, ArrayGeometry::default_board(), test_config()),
                  GapTooLarge);
}

TEST_CASE("initial state estimate uses fixes when present") {
  Scenario sc = make_scenario(20.0, 707, false);
  const NavState x0 = initial_state_estimate(sc.frames, 1.0);
  CHECK((x0.p - sc.truth.front().p).norm() < 0.02);
  CHECK(error_difference(x0.q, sc.truth.front().q).norm() < 0.02);

  // Without fixes: roll/pitch from gravity, zero yaw.
  std::vector<SensorFrame> no_fix = sc.frames;
  for (auto& f : no_fix) f.fix.reset();
  const NavState x1 = initial_state_estimate(no_fix, 1.0);
  CHECK(x1.p.norm() == 0.0);
  const Vec3 up = rotation_matrix(x1.q) *
                  Vec3(no_fix.front().imu->acc.normalized());
  CHECK((up - Vec3(0, 0, 1)).norm() < 0.05);
}
