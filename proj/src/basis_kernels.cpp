#include "magnav/basis_kernels.hpp"

#include <algorithm>
#include <array>

#include "basis_detail.hpp"

namespace magnav {

namespace {

// Per-point sine/cosine tables, one entry per distinct per-axis index. Cuts
// the trig count from 3m to 3*max_n per point.
struct AxisTables {
  std::array<std::vector<detail::AxisTerm>, 3> axis;

  void fill(const GpDomain& domain, const std::array<int, 3>& max_n,
            const Vec3& r) {
    for (int d = 0; d < 3; ++d) {
      axis[d].resize(max_n[d]);
      for (int n = 1; n <= max_n[d]; ++n) {
        axis[d][n - 1] = detail::axis_term(domain.half_lengths()[d], n, r[d]);
      }
    }
  }
};

std::array<int, 3> max_axis_index(const GpDomain& domain) {
  std::array<int, 3> m{1, 1, 1};
  for (const auto& t : domain.modes()) {
    m[0] = std::max(m[0], t.nx);
    m[1] = std::max(m[1], t.ny);
    m[2] = std::max(m[2], t.nz);
  }
  return m;
}

}  // namespace

int field_regressor_batch(const GpDomain& domain, std::span<const Vec3> points,
                          KernelBackend backend, Eigen::MatrixXd& out) {
  const int p = static_cast<int>(points.size());
  const int m = domain.num_modes();
  out.resize(3 * p, 3 + m);
  int outside = 0;

  if (backend == KernelBackend::kSerial) {
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      out.block<3, 3>(3 * i, 0) = Mat3::Identity();
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        const auto tx = detail::axis_term(domain.half_lengths().x(), n.nx, r.x());
        const auto ty = detail::axis_term(domain.half_lengths().y(), n.ny, r.y());
        const auto tz = detail::axis_term(domain.half_lengths().z(), n.nz, r.z());
        detail::mode_gradient(tx, ty, tz, &out(3 * i, 3 + j),
                              &out(3 * i + 1, 3 + j), &out(3 * i + 2, 3 + j));
      }
    }
    return outside;
  }

  const auto max_n = max_axis_index(domain);
#pragma omp parallel reduction(+ : outside)
  {
    AxisTables tables;
#pragma omp for schedule(static)
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      tables.fill(domain, max_n, r);
      out.block<3, 3>(3 * i, 0) = Mat3::Identity();
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        detail::mode_gradient(tables.axis[0][n.nx - 1], tables.axis[1][n.ny - 1],
                              tables.axis[2][n.nz - 1], &out(3 * i, 3 + j),
                              &out(3 * i + 1, 3 + j), &out(3 * i + 2, 3 + j));
      }
    }
  }
  return outside;
}

int field_batch(const GpDomain& domain, const Eigen::VectorXd& eta,
                std::span<const Vec3> points, KernelBackend backend,
                Eigen::Matrix3Xd& out) {
  const int p = static_cast<int>(points.size());
  const int m = domain.num_modes();
  out.resize(3, p);
  int outside = 0;

  if (backend == KernelBackend::kSerial) {
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      Vec3 b = eta.head<3>();
      double gx, gy, gz;
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        const auto tx = detail::axis_term(domain.half_lengths().x(), n.nx, r.x());
        const auto ty = detail::axis_term(domain.half_lengths().y(), n.ny, r.y());
        const auto tz = detail::axis_term(domain.half_lengths().z(), n.nz, r.z());
        detail::mode_gradient(tx, ty, tz, &gx, &gy, &gz);
        const double w = eta(3 + j);
        b.x() += w * gx;
        b.y() += w * gy;
        b.z() += w * gz;
      }
      out.col(i) = b;
    }
    return outside;
  }

  const auto max_n = max_axis_index(domain);
#pragma omp parallel reduction(+ : outside)
  {
    AxisTables tables;
#pragma omp for schedule(static)
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      tables.fill(domain, max_n, r);
      Vec3 b = eta.head<3>();
      double gx, gy, gz;
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        detail::mode_gradient(tables.axis[0][n.nx - 1], tables.axis[1][n.ny - 1],
                              tables.axis[2][n.nz - 1], &gx, &gy, &gz);
        const double w = eta(3 + j);
        b.x() += w * gx;
        b.y() += w * gy;
        b.z() += w * gz;
      }
      out.col(i) = b;
    }
  }
  return outside;
}

int field_jacobian_batch(const GpDomain& domain, const Eigen::VectorXd& eta,
                         std::span<const Vec3> points, KernelBackend backend,
                         std::vector<Mat3>& out) {
  const int p = static_cast<int>(points.size());
  const int m = domain.num_modes();
  out.assign(p, Mat3::Zero());
  int outside = 0;

  auto accumulate = [&](const detail::AxisTerm& tx, const detail::AxisTerm& ty,
                        const detail::AxisTerm& tz, double w, Mat3& jac) {
    double h[6];
    detail::mode_hessian(tx, ty, tz, h);
    jac(0, 0) += w * h[0];
    jac(1, 1) += w * h[1];
    jac(2, 2) += w * h[2];
    jac(0, 1) += w * h[3];
    jac(0, 2) += w * h[4];
    jac(1, 2) += w * h[5];
  };

  if (backend == KernelBackend::kSerial) {
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      Mat3& jac = out[i];
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        accumulate(detail::axis_term(domain.half_lengths().x(), n.nx, r.x()),
                   detail::axis_term(domain.half_lengths().y(), n.ny, r.y()),
                   detail::axis_term(domain.half_lengths().z(), n.nz, r.z()),
                   eta(3 + j), jac);
      }
      jac(1, 0) = jac(0, 1);
      jac(2, 0) = jac(0, 2);
      jac(2, 1) = jac(1, 2);
    }
    return outside;
  }

  const auto max_n = max_axis_index(domain);
#pragma omp parallel reduction(+ : outside)
  {
    AxisTables tables;
#pragma omp for schedule(static)
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      tables.fill(domain, max_n, r);
      Mat3& jac = out[i];
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        accumulate(tables.axis[0][n.nx - 1], tables.axis[1][n.ny - 1],
                   tables.axis[2][n.nz - 1], eta(3 + j), jac);
      }
      jac(1, 0) = jac(0, 1);
      jac(2, 0) = jac(0, 2);
      jac(2, 1) = jac(1, 2);
    }
  }
  return outside;
}

int potential_regressor_batch(const GpDomain& domain,
                              std::span<const Vec3> points,
                              KernelBackend backend, Eigen::MatrixXd& out) {
  const int p = static_cast<int>(points.size());
  const int m = domain.num_modes();
  out.resize(p, 3 + m);
  int outside = 0;

  if (backend == KernelBackend::kSerial) {
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      out.row(i).head<3>() = r.transpose();
      for (int j = 0; j < m; ++j) {
        out(i, 3 + j) = domain.eigenfunction(j, r);
      }
    }
    return outside;
  }

  const auto max_n = max_axis_index(domain);
#pragma omp parallel reduction(+ : outside)
  {
    AxisTables tables;
#pragma omp for schedule(static)
    for (int i = 0; i < p; ++i) {
      const Vec3& r = points[i];
      if (!domain.contains(r)) ++outside;
      tables.fill(domain, max_n, r);
      out.row(i).head<3>() = r.transpose();
      for (int j = 0; j < m; ++j) {
        const auto& n = domain.modes()[j];
        out(i, 3 + j) =
            detail::mode_value(tables.axis[0][n.nx - 1], tables.axis[1][n.ny - 1],
                               tables.axis[2][n.nz - 1]);
      }
    }
  }
  return outside;
}

}  // namespace magnav
