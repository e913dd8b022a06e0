#include <doctest.h>

#include <Eigen/Dense>
#include <memory>

#include "magnav/errors.hpp"
#include "magnav/eskf.hpp"
#include "magnav/rng.hpp"

using namespace magnav;

namespace {

std::shared_ptr<StateLayout> small_layout() {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("p", 3);
  layout->add_quaternion("q");
  layout->add_linear("b", 2);
  return layout;
}

// Linear time-invariant process x' = A x with additive noise Qd.
class LinearProcess final : public ProcessModel {
 public:
  LinearProcess(Eigen::MatrixXd a, Eigen::MatrixXd qd)
      : a_(std::move(a)), qd_(std::move(qd)) {}
  std::string name() const override { return "linear"; }
  void propagate(const FilterState& state, const Eigen::VectorXd&, double dt,
                 Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                 Eigen::MatrixXd& qd) const override {
    if (dt == 0.0) {
      x_next = state.x;
      f = Eigen::MatrixXd::Identity(a_.rows(), a_.cols());
      qd = Eigen::MatrixXd::Zero(a_.rows(), a_.cols());
      return;
    }
    x_next = a_ * state.x;
    f = a_;
    qd = qd_;
  }

 private:
  Eigen::MatrixXd a_, qd_;
};

class LinearMeasurement final : public MeasurementModel {
 public:
  LinearMeasurement(Eigen::MatrixXd h, Eigen::MatrixXd r)
      : h_(std::move(h)), r_(std::move(r)) {}
  std::string name() const override { return "linear_meas"; }
  int dim() const override { return static_cast<int>(h_.rows()); }
  Eigen::VectorXd predict(const FilterState& state) const override {
    return h_ * state.x;
  }
  Eigen::MatrixXd jacobian(const FilterState&) const override { return h_; }
  Eigen::MatrixXd noise(const FilterState&) const override { return r_; }

 private:
  Eigen::MatrixXd h_, r_;
};

std::shared_ptr<StateLayout> linear_layout(int n) {
  auto layout = std::make_shared<StateLayout>();
  layout->add_linear("x", n);
  return layout;
}

Eigen::MatrixXd random_spd(Rng& rng, int n, double scale) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return scale * (a * a.transpose()) +
         1e-3 * scale * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("layout bookkeeping") {
  auto layout = small_layout();
  CHECK(layout->nominal_dim() == 9);
  CHECK(layout->tangent_dim() == 8);
  CHECK(layout->block("q").tangent_offset == 3);
  CHECK(layout->block("b").nominal_offset == 7);
  CHECK_THROWS_AS(layout->block("nope"), UnknownBlock);

  auto state = make_state(layout);
  CHECK(state.quat("q").w() == 1.0);
  CHECK(state.x.size() == 9);
}

TEST_CASE("inject and difference are inverse") {
  Rng rng(51);
  auto state = make_state(small_layout());
  state.seg("p") = rng.normal3();
  state.set_quat("q", error_inject(Quat::Identity(), rng.normal3()));

  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd delta(8);
    for (int j = 0; j < 8; ++j) delta(j) = 0.3 * rng.normal();
    FilterState other = state;
    inject_error(other, delta);
    CHECK((state_difference(state, other.x) - delta).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("matches a textbook linear Kalman filter") {
  Rng rng(52);
  const int n = 4, m = 2;
  Eigen::MatrixXd a(n, n), h(m, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.4 * rng.normal();
  a += Eigen::MatrixXd::Identity(n, n) * 0.5;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) h(i, j) = rng.normal();
  const Eigen::MatrixXd qd = random_spd(rng, n, 0.01);
  const Eigen::MatrixXd r = random_spd(rng, m, 0.1);

  LinearProcess process(a, qd);
  LinearMeasurement meas(h, r);

  auto state = make_state(linear_layout(n));
  for (int i = 0; i < n; ++i) state.x(i) = rng.normal();
  state.cov = random_spd(rng, n, 1.0);

  // Reference filter.
  Eigen::VectorXd x_ref = state.x;
  Eigen::MatrixXd p_ref = state.cov;

  for (int step = 0; step < 25; ++step) {
    eskf_propagate(state, process, Eigen::VectorXd(), 0.1);
    x_ref = a * x_ref;
    p_ref = a * p_ref * a.transpose() + qd;

    Eigen::VectorXd y = h * x_ref;
    for (int i = 0; i < m; ++i) y(i) += 0.3 * rng.normal();
    eskf_update(state, meas, y);

    const Eigen::MatrixXd s = h * p_ref * h.transpose() + r;
    const Eigen::MatrixXd k = p_ref * h.transpose() * s.inverse();
    x_ref += k * (y - h * x_ref);
    const Eigen::MatrixXd ikh = Eigen::MatrixXd::Identity(n, n) - k * h;
    p_ref = ikh * p_ref * ikh.transpose() + k * r * k.transpose();

    CHECK((state.x - x_ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((state.cov - p_ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("propagate edge cases") {
  Rng rng(53);
  const int n = 3;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  LinearProcess process(a, Eigen::MatrixXd::Zero(n, n));
  auto state = make_state(linear_layout(n));
  state.x << 1.0, 2.0, 3.0;
  state.cov = random_spd(rng, n, 1.0);
  const Eigen::VectorXd x0 = state.x;
  const Eigen::MatrixXd p0 = state.cov;

  eskf_propagate(state, process, Eigen::VectorXd(), 0.0);
  CHECK((state.x - x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((state.cov - p0).cwiseAbs().maxCoeff() == 0.0);

  // Static model with zero noise: covariance untouched.
  eskf_propagate(state, process, Eigen::VectorXd(), 0.1);
  CHECK((state.cov - p0).cwiseAbs().maxCoeff() < 1e-15);

  // Non-finite guard.
  class BadProcess final : public ProcessModel {
   public:
    std::string name() const override { return "bad"; }
    void propagate(const FilterState& state, const Eigen::VectorXd&, double,
                   Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                   Eigen::MatrixXd& qd) const override {
      x_next = state.x;
      x_next(0) = std::numeric_limits<double>::quiet_NaN();
      f = Eigen::MatrixXd::Identity(state.x.size(), state.x.size());
      qd = f;
    }
  };
  CHECK_THROWS_AS(eskf_propagate(state, BadProcess(), Eigen::VectorXd(), 0.1),
                  NonFiniteState);
}

TEST_CASE("update edge cases") {
  Rng rng(54);
  const int n = 3;

  SUBCASE("perfect prediction with tiny noise barely moves the state") {
    auto state = make_state(linear_layout(n));
    state.x << 1.0, -2.0, 0.5;
    state.cov = Eigen::MatrixXd::Identity(n, n);
    LinearMeasurement meas(Eigen::MatrixXd::Identity(n, n),
                           1e-12 * Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd y = state.x;
    const auto rec = eskf_update(state, meas, y);
    CHECK(rec.applied);
    CHECK((state.x - y).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("scalar case matches the hand-computed gain") {
    auto state = make_state(linear_layout(1));
    state.x(0) = 2.0;
    state.cov(0, 0) = 4.0;
    Eigen::MatrixXd h(1, 1), r(1, 1);
    h(0, 0) = 0.5;
    r(0, 0) = 1.0;
    LinearMeasurement meas(h, r);
    Eigen::VectorXd y(1);
    y(0) = 3.0;
    eskf_update(state, meas, y);
    // K = PH/(H^2 P + R) = 2/(1+1) = 1; x = 2 + 1*(3-1) = 4; Joseph P:
    // (1-KH)^2 P + K^2 R = 0.25*4 + 1 = 2.
    CHECK(state.x(0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(state.cov(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("Joseph and standard forms agree on healthy problems") {
    for (int trial = 0; trial < 20; ++trial) {
      auto s1 = make_state(linear_layout(n));
      for (int i = 0; i < n; ++i) s1.x(i) = rng.normal();
      s1.cov = random_spd(rng, n, 1.0);
      auto s2 = s1;
      Eigen::MatrixXd h(2, n);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < n; ++j) h(i, j) = rng.normal();
      LinearMeasurement meas(h, random_spd(rng, 2, 0.5));
      Eigen::VectorXd y(2);
      y << rng.normal(), rng.normal();
      EskfOptions joseph, standard;
      standard.joseph = false;
      eskf_update(s1, meas, y, joseph);
      eskf_update(s2, meas, y, standard);
      CHECK((s1.cov - s2.cov).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((s1.x - s2.x).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  SUBCASE("effectively infinite noise leaves the state unchanged") {
    auto state = make_state(linear_layout(n));
    state.x << 1.0, 2.0, 3.0;
    state.cov = Eigen::MatrixXd::Identity(n, n);
    LinearMeasurement meas(Eigen::MatrixXd::Identity(n, n),
                           1e12 * Eigen::MatrixXd::Identity(n, n));
    Eigen::VectorXd y(3);
    y << 100.0, -50.0, 7.0;
    eskf_update(state, meas, y);
    CHECK((state.x - Eigen::Vector3d(1, 2, 3)).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("singular innovation covariance skips the update") {
    auto state = make_state(linear_layout(n));
    state.cov = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd h(2, n);
    h.setZero();
    h.row(0) << 1, 0, 0;
    h.row(1) << 1, 0, 0;  // duplicated row, zero noise -> singular S
    LinearMeasurement meas(h, Eigen::MatrixXd::Zero(2, 2));
    Eigen::VectorXd y(2);
    y << 1.0, 1.0;
    const Eigen::VectorXd x0 = state.x;
    const auto rec = eskf_update(state, meas, y);
    CHECK_FALSE(rec.applied);
    CHECK(rec.skip_reason == "singular_innovation_covariance");
    CHECK((state.x - x0).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("chi-square gate skips implausible measurements") {
    auto state = make_state(linear_layout(1));
    state.cov(0, 0) = 1.0;
    Eigen::MatrixXd h(1, 1), r(1, 1);
    h(0, 0) = 1.0;
    r(0, 0) = 1.0;
    LinearMeasurement meas(h, r);
    Eigen::VectorXd y(1);
    y(0) = 100.0;  // chi2 = 100^2/2 = 5000
    EskfOptions opts;
    opts.chi_sq_gate = 9.0;
    const auto rec = eskf_update(state, meas, y, opts);
    CHECK_FALSE(rec.applied);
    CHECK(rec.skip_reason == "chi_sq_gate");
  }
}

TEST_CASE("covariance stays symmetric PSD through many random cycles") {
  Rng rng(55);
  const int n = 4;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  a(0, 1) = 0.1;
  a(2, 3) = -0.05;
  LinearProcess process(a, 1e-4 * Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd h(1, n);
  h << 1, 0, 1, 0;
  LinearMeasurement meas(h, 0.01 * Eigen::MatrixXd::Identity(1, 1));

  auto state = make_state(linear_layout(n));
  state.cov = Eigen::MatrixXd::Identity(n, n);

  for (int i = 0; i < 100000; ++i) {
    eskf_propagate(state, process, Eigen::VectorXd(), 0.01);
    Eigen::VectorXd y(1);
    y(0) = rng.normal();
    eskf_update(state, meas, y);
  }
  CHECK((state.cov - state.cov.transpose()).cwiseAbs().maxCoeff() <
        1e-9 * state.cov.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.cov);
  CHECK(es.eigenvalues().minCoeff() > -1e-9 * state.cov.norm());
}

TEST_CASE("clone and marginalize") {
  Rng rng(56);
  auto state = make_state(small_layout());
  state.seg("p") = Vec3(1, 2, 3);
  state.set_quat("q", error_inject(Quat::Identity(), Vec3(0.2, -0.1, 0.4)));
  state.cov = random_spd(rng, 8, 1.0);
  const FilterState original = state;

  augment_clones(state, {{"p", "past_p"}, {"q", "past_q"}});
  CHECK(state.layout->tangent_dim() == 14);
  CHECK((state.seg("past_p") - state.seg("p")).cwiseAbs().maxCoeff() == 0.0);
  CHECK(state.quat("past_q").coeffs() == state.quat("q").coeffs());

  // Clone algebra: Var(clone) = Var(source) = Cov(clone, source).
  const auto& bp = state.layout->block("p");
  const auto& bpp = state.layout->block("past_p");
  const auto var_p = state.cov.block<3, 3>(bp.tangent_offset, bp.tangent_offset);
  const auto var_pp =
      state.cov.block<3, 3>(bpp.tangent_offset, bpp.tangent_offset);
  const auto cross =
      state.cov.block<3, 3>(bpp.tangent_offset, bp.tangent_offset);
  CHECK((var_p - var_pp).cwiseAbs().maxCoeff() == 0.0);
  CHECK((var_p - cross).cwiseAbs().maxCoeff() == 0.0);
  // Cross-covariance of the clone against other blocks matches the source.
  const auto& bq = state.layout->block("q");
  CHECK((state.cov.block<3, 3>(bpp.tangent_offset, bq.tangent_offset) -
         state.cov.block<3, 3>(bp.tangent_offset, bq.tangent_offset))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  marginalize(state, "past_q");
  marginalize(state, "past_p");
  CHECK(state.layout->tangent_dim() == 8);
  CHECK((state.cov - original.cov).cwiseAbs().maxCoeff() == 0.0);
  CHECK((state.x - original.x).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(marginalize(state, "ghost"), UnknownBlock);
}

TEST_CASE("reclone refreshes clone statistics") {
  Rng rng(57);
  auto state = make_state(small_layout());
  state.cov = random_spd(rng, 8, 1.0);
  augment_clones(state, {{"p", "past_p"}, {"q", "past_q"}});

  // Disturb the state, then re-clone and check equality blocks again.
  Eigen::VectorXd delta(state.layout->tangent_dim());
  for (int i = 0; i < delta.size(); ++i) delta(i) = 0.1 * rng.normal();
  inject_error(state, delta);
  state.cov = random_spd(rng, 14, 1.0);

  reclone(state, {{"p", "past_p"}, {"q", "past_q"}});
  const auto& bp = state.layout->block("p");
  const auto& bq = state.layout->block("q");
  const auto& bpp = state.layout->block("past_p");
  const auto& bpq = state.layout->block("past_q");
  CHECK((state.seg("past_p") - state.seg("p")).cwiseAbs().maxCoeff() == 0.0);
  CHECK((state.cov.block<3, 3>(bpp.tangent_offset, bpp.tangent_offset) -
         state.cov.block<3, 3>(bp.tangent_offset, bp.tangent_offset))
            .cwiseAbs()
            .maxCoeff() == 0.0);
  // Clone/clone cross block equals source/source cross block.
  CHECK((state.cov.block<3, 3>(bpp.tangent_offset, bpq.tangent_offset) -
         state.cov.block<3, 3>(bp.tangent_offset, bq.tangent_offset))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("state hash changes with content") {
  auto s1 = make_state(small_layout());
  auto s2 = s1;
  CHECK(state_hash(s1) == state_hash(s2));
  s2.x(0) += 1e-12;
  CHECK(state_hash(s1) != state_hash(s2));
}
