#include "magnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "magnav/errors.hpp"
#include "magnav/rng.hpp"

namespace magnav {

namespace {

// Natural cubic spline through (t_i, y_i) with analytic derivatives.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> t, std::vector<double> y)
      : t_(std::move(t)), y_(std::move(y)) {
    const int n = static_cast<int>(t_.size());
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Thomas algorithm on the tridiagonal system for second derivatives.
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (int i = 1; i < n - 1; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    for (int i = 2; i < n - 1; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    for (int i = n - 2; i >= 1; --i) {
      m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }
  }

  void eval(double t, double* y, double* dy, double* ddy) const {
    const int n = static_cast<int>(t_.size());
    if (n == 1) {
      *y = y_[0];
      *dy = 0.0;
      *ddy = 0.0;
      return;
    }
    int i = static_cast<int>(std::upper_bound(t_.begin(), t_.end(), t) -
                             t_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = t_[i + 1] - t_[i];
    const double u = (t_[i + 1] - t) / h;
    const double w = (t - t_[i]) / h;
    *y = u * y_[i] + w * y_[i + 1] +
         ((u * u * u - u) * m_[i] + (w * w * w - w) * m_[i + 1]) * h * h / 6.0;
    *dy = (y_[i + 1] - y_[i]) / h +
          (-(3 * u * u - 1) * m_[i] + (3 * w * w - 1) * m_[i + 1]) * h / 6.0;
    *ddy = u * m_[i] + w * m_[i + 1];
  }

 private:
  std::vector<double> t_, y_;
  std::vector<double> m_;  // second derivatives at the knots
};

}  // namespace

SyntheticWorld sample_world(const GpDomain& domain, std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xE7A));
  const Eigen::VectorXd lam = prior_covariance_diagonal(domain);
  Eigen::VectorXd eta(domain.coeff_dim());
  for (int i = 0; i < eta.size(); ++i) {
    eta(i) = std::sqrt(lam(i)) * rng.normal();
  }
  return SyntheticWorld(domain, std::move(eta), seed);
}

std::vector<TrajectorySample> synthesize_trajectory(const TrajectorySpec& spec) {
  if (spec.waypoints.empty()) {
    throw std::invalid_argument("synthesize_trajectory: no waypoints");
  }
  for (size_t i = 1; i < spec.waypoints.size(); ++i) {
    if (spec.waypoints[i].t <= spec.waypoints[i - 1].t) {
      throw std::invalid_argument(
          "synthesize_trajectory: waypoint times must increase");
    }
  }

  std::vector<double> t;
  std::vector<double> px, py, pz;
  for (const auto& w : spec.waypoints) {
    t.push_back(w.t);
    px.push_back(w.p.x());
    py.push_back(w.p.y());
    pz.push_back(w.p.z());
  }
  const CubicSpline sx(t, px), sy(t, py), sz(t, pz);

  const double t0 = t.front();
  const double t1 = t.back();
  const double dt = 1.0 / spec.sample_rate;
  const int count = static_cast<int>(std::floor((t1 - t0) / dt)) + 1;

  std::vector<TrajectorySample> out;
  out.reserve(count);
  double yaw_prev = 0.0;
  bool yaw_initialized = false;
  constexpr double kHeadingSpeed = 0.1;  // m/s, below this yaw is held

  for (int k = 0; k < count; ++k) {
    TrajectorySample s;
    s.t = t0 + k * dt;
    Vec3 p, v, a;
    sx.eval(s.t, &p.x(), &v.x(), &a.x());
    sy.eval(s.t, &p.y(), &v.y(), &a.y());
    sz.eval(s.t, &p.z(), &v.z(), &a.z());
    s.p = p;
    s.v = v;
    s.a = a;
    if (v.norm() > spec.max_speed) {
      throw InfeasibleSpeed("synthesize_trajectory: spline speed " +
                            std::to_string(v.norm()) + " m/s exceeds limit");
    }

    const double h_speed_sq = v.x() * v.x() + v.y() * v.y();
    double yaw = yaw_prev;
    double yaw_rate = 0.0;
    if (std::sqrt(h_speed_sq) > kHeadingSpeed) {
      yaw = std::atan2(v.y(), v.x());
      if (!yaw_initialized) {
        yaw_initialized = true;
      }
      yaw_rate = (v.x() * a.y() - v.y() * a.x()) / h_speed_sq;
    }
    yaw_prev = yaw;
    s.q = quat_exp(Vec3(0, 0, yaw));
    s.omega_body = Vec3(0, 0, yaw_rate);
    out.push_back(s);
  }
  return out;
}

TrajectorySpec corridor_loop_spec(double duration, double width, double depth) {
  TrajectorySpec spec;
  spec.family = "loop";
  const double dwell = 8.0;
  const double t_move = duration - dwell;
  if (t_move < 10.0) {
    throw std::invalid_argument("corridor_loop_spec: duration too short");
  }
  // Two laps around a rectangle, starting and ending at the origin corner.
  std::vector<Vec3> corners = {
      Vec3(0, 0, 0),          Vec3(width, 0, 0), Vec3(width, depth, 0),
      Vec3(0, depth, 0),      Vec3(0, 0, 0),     Vec3(width, 0, 0),
      Vec3(width, depth, 0),  Vec3(0, depth, 0), Vec3(0, 0, 0)};
  spec.waypoints.push_back({0.0, corners.front()});
  spec.waypoints.push_back({dwell * 0.5, corners.front()});
  spec.waypoints.push_back({dwell, corners.front()});
  const double leg = t_move / static_cast<double>(corners.size() - 1);
  for (size_t i = 1; i < corners.size(); ++i) {
    spec.waypoints.push_back({dwell + leg * i, corners[i]});
  }
  return spec;
}

TrajectorySpec long_corridor_spec(double duration, double length) {
  TrajectorySpec spec;
  spec.family = "long-corridor";
  const double dwell = 8.0;
  const double t_move = duration - dwell;
  if (t_move < 10.0) {
    throw std::invalid_argument("long_corridor_spec: duration too short");
  }
  spec.waypoints.push_back({0.0, Vec3::Zero()});
  spec.waypoints.push_back({dwell * 0.5, Vec3::Zero()});
  spec.waypoints.push_back({dwell, Vec3::Zero()});
  // Out and back along x, with a mild lateral wiggle at the midpoints.
  spec.waypoints.push_back({dwell + 0.25 * t_move, Vec3(length * 0.5, 0.4, 0)});
  spec.waypoints.push_back({dwell + 0.50 * t_move, Vec3(length, 0, 0)});
  spec.waypoints.push_back({dwell + 0.75 * t_move, Vec3(length * 0.5, -0.4, 0)});
  spec.waypoints.push_back({dwell + t_move, Vec3::Zero()});
  return spec;
}

TrajectorySpec spiral_climb_spec(double duration, double radius, double climb) {
  TrajectorySpec spec;
  spec.family = "spiral";
  const double dwell = 8.0;
  const double t_move = duration - dwell;
  if (t_move < 10.0) {
    throw std::invalid_argument("spiral_climb_spec: duration too short");
  }
  spec.waypoints.push_back({0.0, Vec3(radius, 0, 0)});
  spec.waypoints.push_back({dwell * 0.5, Vec3(radius, 0, 0)});
  spec.waypoints.push_back({dwell, Vec3(radius, 0, 0)});
  const int turns = 3;
  const int per_turn = 8;
  const int total = turns * per_turn;
  for (int i = 1; i <= total; ++i) {
    const double frac = static_cast<double>(i) / total;
    const double angle = 2.0 * M_PI * turns * frac;
    spec.waypoints.push_back({dwell + t_move * frac,
                              Vec3(radius * std::cos(angle),
                                   radius * std::sin(angle), climb * frac)});
  }
  return spec;
}

GpDomain domain_for_trajectory(const std::vector<TrajectorySample>& trajectory,
                               const GpHyperparams& hp, int num_modes,
                               double margin_fraction) {
  if (trajectory.empty()) {
    throw std::invalid_argument("domain_for_trajectory: empty trajectory");
  }
  Vec3 lo = trajectory.front().p;
  Vec3 hi = trajectory.front().p;
  for (const auto& s : trajectory) {
    lo = lo.cwiseMin(s.p);
    hi = hi.cwiseMax(s.p);
  }
  // The array extends ~0.2 m from the body origin; include it in the bound.
  const Vec3 center = 0.5 * (lo + hi);
  Vec3 half = 0.5 * (hi - lo) + Vec3::Constant(0.25);
  half = (1.0 + margin_fraction) * half + Vec3::Constant(2.0 * hp.ell_se);
  // The model is expressed around the domain center; keep the trajectory
  // coordinates as-is by centering the cuboid on the bounding box. Callers
  // that need an off-origin center must shift their data; the synthetic
  // scenarios keep trajectories near the origin, so centering at zero with
  // enlarged half-lengths keeps the math simple and the domain valid.
  half += center.cwiseAbs();
  return GpDomain(half, num_modes, hp);
}

SimOutput synthesize_sensors(const SyntheticWorld& world,
                             const std::vector<TrajectorySample>& trajectory,
                             const ArrayGeometry& geometry,
                             const SimNoise& noise, std::uint64_t seed) {
  if (trajectory.empty()) {
    throw std::invalid_argument("synthesize_sensors: empty trajectory");
  }
  geometry.validate();

  Rng acc_rng(Rng::mix(seed, 1));
  Rng gyro_rng(Rng::mix(seed, 2));
  Rng mag_rng(Rng::mix(seed, 3));
  Rng baro_rng(Rng::mix(seed, 4));
  Rng fix_rng(Rng::mix(seed, 5));
  Rng bias_rng(Rng::mix(seed, 6));

  Vec3 ba = Vec3::Zero();
  Vec3 bg = Vec3::Zero();
  if (!noise.zero_noise) {
    ba = noise.sigma_accel_bias_draw * bias_rng.normal3();
    bg = noise.sigma_gyro_bias_draw * bias_rng.normal3();
  }

  const double dt = trajectory.size() > 1
                        ? trajectory[1].t - trajectory[0].t
                        : 0.01;
  const double sigma_acc_sample =
      noise.zero_noise ? 0.0 : noise.imu.sigma_acc / std::sqrt(dt);
  const double sigma_gyro_sample =
      noise.zero_noise ? 0.0 : noise.imu.sigma_gyro / std::sqrt(dt);

  const double t0 = trajectory.front().t;
  const int baro_every =
      std::max(1, static_cast<int>(std::round(1.0 / (noise.baro_rate * dt))));
  const int fix_every =
      std::max(1, static_cast<int>(std::round(1.0 / (noise.fix_rate * dt))));

  SimOutput out;
  out.frames.reserve(trajectory.size());
  out.truth.reserve(trajectory.size());

  for (size_t k = 0; k < trajectory.size(); ++k) {
    const auto& s = trajectory[k];
    const Mat3 rot = rotation_matrix(s.q);
    SensorFrame frame;
    frame.t = s.t;

    ImuSample imu;
    imu.t = s.t;
    imu.acc = rot.transpose() * (s.a - world.gravity) + ba +
              sigma_acc_sample * acc_rng.normal3();
    imu.gyro = s.omega_body + bg + sigma_gyro_sample * gyro_rng.normal3();
    frame.imu = imu;

    if (k % static_cast<size_t>(std::max(noise.mag_decimation, 1)) == 0) {
      Eigen::VectorXd mag(3 * geometry.size());
      for (int i = 0; i < geometry.size(); ++i) {
        const Vec3 pos = s.p + rot * geometry.positions[i];
        Vec3 b = rot.transpose() * world.field_at(pos);
        if (!noise.zero_noise) b += noise.sigma_mag * mag_rng.normal3();
        mag.segment<3>(3 * i) = b;
      }
      frame.mag = mag;
    }

    if (k % static_cast<size_t>(baro_every) == 0) {
      double alt = s.p.z();
      if (!noise.zero_noise) alt += noise.sigma_baro * baro_rng.normal();
      frame.baro = alt;
    }

    if (s.t - t0 < noise.fix_duration && k % static_cast<size_t>(fix_every) == 0) {
      PoseFixSample fix;
      fix.p = s.p;
      fix.q = s.q;
      if (!noise.zero_noise) {
        fix.p += noise.sigma_fix_pos * fix_rng.normal3();
        fix.q = error_inject(fix.q, noise.sigma_fix_att * fix_rng.normal3());
      }
      frame.fix = fix;
    }

    out.frames.push_back(std::move(frame));

    TrajectoryPoint truth;
    truth.t = s.t;
    truth.p = s.p;
    truth.q = s.q;
    out.truth.push_back(truth);
  }

  out.initial_state.p = trajectory.front().p;
  out.initial_state.v = trajectory.front().v;
  out.initial_state.q = trajectory.front().q;
  out.initial_state.ba = ba;
  out.initial_state.bg = bg;
  return out;
}

LocalCoeffs local_truth_coeffs(const SyntheticWorld& world, const Vec3& p,
                               const Quat& q) {
  const Mat3 rot = rotation_matrix(q);
  const Vec3 mean_body = rot.transpose() * world.field_at(p);
  const Mat3 jac_body =
      rot.transpose() * global_field_jacobian(world.domain, world.eta_true, p) * rot;
  Mat3 sym = 0.5 * (jac_body + jac_body.transpose());
  sym -= (sym.trace() / 3.0) * Mat3::Identity();
  LocalCoeffs theta;
  theta.head<3>() = mean_body;
  theta.tail<5>() = pack_gradient(sym);
  return theta;
}

}  // namespace magnav
