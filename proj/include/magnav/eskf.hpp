#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "magnav/geometry.hpp"

namespace magnav {

// Error-state EKF over a declarative block layout. Each filter instance
// declares an ordered list of blocks (position, velocity, attitude
// quaternion, biases, field coefficients, clones); the same engine then
// serves every filter in the project. Nominal state is a flat vector with
// quaternions stored scalar-first; the error state lives in the tangent
// space (3 per quaternion block, right-multiplicative convention, see
// geometry.hpp).

struct BlockSpec {
  std::string name;
  int nominal_dim = 0;
  int tangent_dim = 0;
  bool quaternion = false;
  int nominal_offset = 0;
  int tangent_offset = 0;
};

class StateLayout {
 public:
  int add_linear(const std::string& name, int dim);
  int add_quaternion(const std::string& name);

  const BlockSpec& block(std::string_view name) const;  // throws UnknownBlock
  const BlockSpec& block(int index) const { return blocks_[index]; }
  bool has(std::string_view name) const;
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  int nominal_dim() const { return nominal_dim_; }
  int tangent_dim() const { return tangent_dim_; }

 private:
  std::vector<BlockSpec> blocks_;
  int nominal_dim_ = 0;
  int tangent_dim_ = 0;
};

struct FilterState {
  std::shared_ptr<const StateLayout> layout;
  Eigen::VectorXd x;    // nominal, layout->nominal_dim()
  Eigen::MatrixXd cov;  // tangent-space, layout->tangent_dim() square
  double t = 0.0;

  Eigen::VectorBlock<Eigen::VectorXd> seg(std::string_view name);
  Eigen::VectorXd seg(std::string_view name) const;
  Quat quat(std::string_view name) const;
  void set_quat(std::string_view name, const Quat& q);
};

FilterState make_state(std::shared_ptr<const StateLayout> layout);

// x <- x ⊕ delta (linear add; quaternion blocks q ⊗ exp(delta)).
void inject_error(FilterState& state, const Eigen::VectorXd& delta);

// Tangent-space difference of a nominal vector against the state's nominal:
// inject_error(s, d) followed by state_difference(s_before, s_after.x) == d.
Eigen::VectorXd state_difference(const FilterState& base,
                                 const Eigen::VectorXd& other_x);

class ProcessModel {
 public:
  virtual ~ProcessModel() = default;
  virtual std::string name() const = 0;
  // Advance the nominal state by dt under input u; fill the tangent
  // transition F and the discretized process noise Qd (= G Q G^T).
  virtual void propagate(const FilterState& state, const Eigen::VectorXd& u,
                         double dt, Eigen::VectorXd& x_next, Eigen::MatrixXd& f,
                         Eigen::MatrixXd& qd) const = 0;
};

class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;  // residual dimension
  // Measurement a noise-free sensor would produce at this state (raw
  // parameterization, e.g. quaternion components for attitude fixes).
  virtual Eigen::VectorXd predict(const FilterState& state) const = 0;
  // Residual y ⊖ predict(state); default is plain subtraction.
  virtual Eigen::VectorXd residual(const FilterState& state,
                                   const Eigen::VectorXd& y) const;
  // H = d residual(x ⊕ delta measured) / d delta; for linear residuals this
  // is d predict / d delta.
  virtual Eigen::MatrixXd jacobian(const FilterState& state) const = 0;
  virtual Eigen::MatrixXd noise(const FilterState& state) const = 0;
};

struct UpdateRecord {
  double t = 0.0;
  std::string model;
  Eigen::VectorXd innovation;
  Eigen::VectorXd innovation_variance;  // diagonal of S
  double chi_sq = 0.0;
  bool applied = false;
  std::string skip_reason;
  std::uint64_t state_hash = 0;
};

struct EskfOptions {
  bool joseph = true;
  double condition_threshold = 1e12;
  std::optional<double> chi_sq_gate;  // absolute threshold, off by default
};

using DiagnosticSink = std::function<void(const UpdateRecord&)>;

// Propagates nominal and covariance; throws NonFiniteState when the model
// output is non-finite. Advances state.t by dt.
void eskf_propagate(FilterState& state, const ProcessModel& model,
                    const Eigen::VectorXd& u, double dt);

// Joseph-form update with error injection and reset. A singular innovation
// covariance (condition estimate above the threshold) or a failed chi-square
// gate skips the update and reports it in the record.
UpdateRecord eskf_update(FilterState& state, const MeasurementModel& model,
                         const Eigen::VectorXd& y,
                         const EskfOptions& options = {},
                         const DiagnosticSink& sink = nullptr);

// Appends clone blocks. Each pair is (source block, clone name); nominal
// values are copied and covariance rows/columns duplicated, so
// Cov(clone, anything) == Cov(source, anything) right after the call.
void augment_clones(FilterState& state,
                    const std::vector<std::pair<std::string, std::string>>& pairs);

// Overwrites existing clone blocks from their sources (layout unchanged).
void reclone(FilterState& state,
             const std::vector<std::pair<std::string, std::string>>& pairs);

// Drops a block and its covariance rows/columns.
void marginalize(FilterState& state, const std::string& name);

void symmetrize_covariance(FilterState& state);

std::uint64_t state_hash(const FilterState& state);

}  // namespace magnav
