#include "magnav/eskf.hpp"

#include <Eigen/Dense>
#include <cstring>

#include "magnav/errors.hpp"

namespace magnav {

int StateLayout::add_linear(const std::string& name, int dim) {
  BlockSpec b;
  b.name = name;
  b.nominal_dim = dim;
  b.tangent_dim = dim;
  b.quaternion = false;
  b.nominal_offset = nominal_dim_;
  b.tangent_offset = tangent_dim_;
  blocks_.push_back(b);
  nominal_dim_ += dim;
  tangent_dim_ += dim;
  return num_blocks() - 1;
}

int StateLayout::add_quaternion(const std::string& name) {
  BlockSpec b;
  b.name = name;
  b.nominal_dim = 4;
  b.tangent_dim = 3;
  b.quaternion = true;
  b.nominal_offset = nominal_dim_;
  b.tangent_offset = tangent_dim_;
  blocks_.push_back(b);
  nominal_dim_ += 4;
  tangent_dim_ += 3;
  return num_blocks() - 1;
}

const BlockSpec& StateLayout::block(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return b;
  }
  throw UnknownBlock("StateLayout: no block named '" + std::string(name) + "'");
}

bool StateLayout::has(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return true;
  }
  return false;
}

Eigen::VectorBlock<Eigen::VectorXd> FilterState::seg(std::string_view name) {
  const auto& b = layout->block(name);
  return x.segment(b.nominal_offset, b.nominal_dim);
}

Eigen::VectorXd FilterState::seg(std::string_view name) const {
  const auto& b = layout->block(name);
  return x.segment(b.nominal_offset, b.nominal_dim);
}

Quat FilterState::quat(std::string_view name) const {
  const auto& b = layout->block(name);
  return Quat(x(b.nominal_offset), x(b.nominal_offset + 1),
              x(b.nominal_offset + 2), x(b.nominal_offset + 3));
}

void FilterState::set_quat(std::string_view name, const Quat& q) {
  const auto& b = layout->block(name);
  x(b.nominal_offset) = q.w();
  x(b.nominal_offset + 1) = q.x();
  x(b.nominal_offset + 2) = q.y();
  x(b.nominal_offset + 3) = q.z();
}

FilterState make_state(std::shared_ptr<const StateLayout> layout) {
  FilterState s;
  s.x = Eigen::VectorXd::Zero(layout->nominal_dim());
  s.cov = Eigen::MatrixXd::Zero(layout->tangent_dim(), layout->tangent_dim());
  for (int i = 0; i < layout->num_blocks(); ++i) {
    const auto& b = layout->block(i);
    if (b.quaternion) s.x(b.nominal_offset) = 1.0;  // identity quaternion
  }
  s.layout = std::move(layout);
  return s;
}

void inject_error(FilterState& state, const Eigen::VectorXd& delta) {
  for (int i = 0; i < state.layout->num_blocks(); ++i) {
    const auto& b = state.layout->block(i);
    if (b.quaternion) {
      const Quat q = state.quat(b.name);
      state.set_quat(b.name,
                     error_inject(q, delta.segment<3>(b.tangent_offset)));
    } else {
      state.x.segment(b.nominal_offset, b.nominal_dim) +=
          delta.segment(b.tangent_offset, b.tangent_dim);
    }
  }
}

Eigen::VectorXd state_difference(const FilterState& base,
                                 const Eigen::VectorXd& other_x) {
  Eigen::VectorXd d(base.layout->tangent_dim());
  for (int i = 0; i < base.layout->num_blocks(); ++i) {
    const auto& b = base.layout->block(i);
    if (b.quaternion) {
      const Quat qb = base.quat(b.name);
      const Quat qo(other_x(b.nominal_offset), other_x(b.nominal_offset + 1),
                    other_x(b.nominal_offset + 2), other_x(b.nominal_offset + 3));
      d.segment<3>(b.tangent_offset) = error_difference(qb, qo);
    } else {
      d.segment(b.tangent_offset, b.tangent_dim) =
          other_x.segment(b.nominal_offset, b.nominal_dim) -
          base.x.segment(b.nominal_offset, b.nominal_dim);
    }
  }
  return d;
}

Eigen::VectorXd MeasurementModel::residual(const FilterState& state,
                                           const Eigen::VectorXd& y) const {
  return y - predict(state);
}

void symmetrize_covariance(FilterState& state) {
  state.cov = 0.5 * (state.cov + state.cov.transpose()).eval();
}

std::uint64_t state_hash(const FilterState& state) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const double* data, Eigen::Index n) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (Eigen::Index i = 0; i < n * static_cast<Eigen::Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(state.x.data(), state.x.size());
  mix(&state.t, 1);
  return h;
}

void eskf_propagate(FilterState& state, const ProcessModel& model,
                    const Eigen::VectorXd& u, double dt) {
  Eigen::VectorXd x_next;
  Eigen::MatrixXd f, qd;
  model.propagate(state, u, dt, x_next, f, qd);
  if (!x_next.allFinite()) {
    throw NonFiniteState("eskf_propagate: non-finite state from model " +
                         model.name());
  }
  state.x = std::move(x_next);
  state.cov = f * state.cov * f.transpose() + qd;
  symmetrize_covariance(state);
  state.t += dt;
}

UpdateRecord eskf_update(FilterState& state, const MeasurementModel& model,
                         const Eigen::VectorXd& y, const EskfOptions& options,
                         const DiagnosticSink& sink) {
  UpdateRecord rec;
  rec.t = state.t;
  rec.model = model.name();

  const Eigen::VectorXd resid = model.residual(state, y);
  const Eigen::MatrixXd h = model.jacobian(state);
  const Eigen::MatrixXd r = model.noise(state);

  const Eigen::MatrixXd pht = state.cov * h.transpose();
  Eigen::MatrixXd s = h * pht + r;
  s = 0.5 * (s + s.transpose()).eval();

  rec.innovation = resid;
  rec.innovation_variance = s.diagonal();

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.maxCoeff();
  const double dmin = d.minCoeff();
  if (ldlt.info() != Eigen::Success || dmin <= 0.0 ||
      dmax / dmin > options.condition_threshold) {
    rec.applied = false;
    rec.skip_reason = "singular_innovation_covariance";
    rec.state_hash = state_hash(state);
    if (sink) sink(rec);
    return rec;
  }

  rec.chi_sq = resid.dot(ldlt.solve(resid));
  if (options.chi_sq_gate && rec.chi_sq > *options.chi_sq_gate) {
    rec.applied = false;
    rec.skip_reason = "chi_sq_gate";
    rec.state_hash = state_hash(state);
    if (sink) sink(rec);
    return rec;
  }

  const Eigen::MatrixXd gain = ldlt.solve(pht.transpose()).transpose();
  inject_error(state, gain * resid);

  if (options.joseph) {
    const Eigen::MatrixXd ikh =
        Eigen::MatrixXd::Identity(state.cov.rows(), state.cov.cols()) - gain * h;
    state.cov = ikh * state.cov * ikh.transpose() + gain * r * gain.transpose();
  } else {
    state.cov -= gain * h * state.cov;
  }
  symmetrize_covariance(state);

  rec.applied = true;
  rec.state_hash = state_hash(state);
  if (sink) sink(rec);
  return rec;
}

void augment_clones(
    FilterState& state,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  auto next = std::make_shared<StateLayout>(*state.layout);
  for (const auto& [src, dst] : pairs) {
    const auto& b = state.layout->block(src);
    if (b.quaternion) {
      next->add_quaternion(dst);
    } else {
      next->add_linear(dst, b.nominal_dim);
    }
  }

  const int old_n = state.layout->nominal_dim();
  const int old_t = state.layout->tangent_dim();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(next->nominal_dim());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(next->tangent_dim(), next->tangent_dim());
  x.head(old_n) = state.x;
  cov.topLeftCorner(old_t, old_t) = state.cov;

  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& src_i = state.layout->block(pairs[i].first);
    const auto& dst_i = next->block(pairs[i].second);
    x.segment(dst_i.nominal_offset, dst_i.nominal_dim) =
        state.x.segment(src_i.nominal_offset, src_i.nominal_dim);
    cov.block(dst_i.tangent_offset, 0, dst_i.tangent_dim, old_t) =
        state.cov.block(src_i.tangent_offset, 0, src_i.tangent_dim, old_t);
    cov.block(0, dst_i.tangent_offset, old_t, dst_i.tangent_dim) =
        state.cov.block(0, src_i.tangent_offset, old_t, src_i.tangent_dim);
    for (size_t j = 0; j < pairs.size(); ++j) {
      const auto& src_j = state.layout->block(pairs[j].first);
      const auto& dst_j = next->block(pairs[j].second);
      cov.block(dst_i.tangent_offset, dst_j.tangent_offset, dst_i.tangent_dim,
                dst_j.tangent_dim) =
          state.cov.block(src_i.tangent_offset, src_j.tangent_offset,
                          src_i.tangent_dim, src_j.tangent_dim);
    }
  }

  state.layout = std::move(next);
  state.x = std::move(x);
  state.cov = std::move(cov);
}

void reclone(FilterState& state,
             const std::vector<std::pair<std::string, std::string>>& pairs) {
  const int t = state.layout->tangent_dim();
  // Rows first, then columns: after both passes every clone/clone cross block
  // equals the corresponding source/source block.
  for (const auto& [src, dst] : pairs) {
    const auto& bs = state.layout->block(src);
    const auto& bd = state.layout->block(dst);
    if (bs.nominal_dim != bd.nominal_dim || bs.quaternion != bd.quaternion) {
      throw UnknownBlock("reclone: incompatible blocks " + src + " -> " + dst);
    }
    state.x.segment(bd.nominal_offset, bd.nominal_dim) =
        state.x.segment(bs.nominal_offset, bs.nominal_dim);
    state.cov.block(bd.tangent_offset, 0, bd.tangent_dim, t) =
        state.cov.block(bs.tangent_offset, 0, bs.tangent_dim, t);
  }
  for (const auto& [src, dst] : pairs) {
    const auto& bs = state.layout->block(src);
    const auto& bd = state.layout->block(dst);
    state.cov.block(0, bd.tangent_offset, t, bd.tangent_dim) =
        state.cov.block(0, bs.tangent_offset, t, bs.tangent_dim);
  }
}

void marginalize(FilterState& state, const std::string& name) {
  const auto& victim = state.layout->block(name);  // validates existence
  auto next = std::make_shared<StateLayout>();
  for (int i = 0; i < state.layout->num_blocks(); ++i) {
    const auto& b = state.layout->block(i);
    if (b.name == name) continue;
    if (b.quaternion) {
      next->add_quaternion(b.name);
    } else {
      next->add_linear(b.name, b.nominal_dim);
    }
  }

  Eigen::VectorXd x(next->nominal_dim());
  Eigen::MatrixXd cov(next->tangent_dim(), next->tangent_dim());
  const int nh = victim.nominal_offset;
  const int nt = state.layout->nominal_dim() - nh - victim.nominal_dim;
  x.head(nh) = state.x.head(nh);
  x.tail(nt) = state.x.tail(nt);

  const int th = victim.tangent_offset;
  const int tt = state.layout->tangent_dim() - th - victim.tangent_dim;
  cov.topLeftCorner(th, th) = state.cov.topLeftCorner(th, th);
  cov.topRightCorner(th, tt) = state.cov.topRightCorner(th, tt);
  cov.bottomLeftCorner(tt, th) = state.cov.bottomLeftCorner(tt, th);
  cov.bottomRightCorner(tt, tt) = state.cov.bottomRightCorner(tt, tt);

  state.layout = std::move(next);
  state.x = std::move(x);
  state.cov = std::move(cov);
}

}  // namespace magnav
