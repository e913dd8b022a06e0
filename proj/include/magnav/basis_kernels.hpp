#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "magnav/global_field.hpp"

namespace magnav {

// Batch evaluation of the reduced-rank basis over many points. These loops
// dominate the SLAM update cost (N sensors x m modes), so they come in two
// backends: a serial reference that evaluates the product formula mode by
// mode, and an OpenMP version that reuses per-axis sine/cosine tables and
// splits points across threads. Both produce bitwise-identical results; the
// unit tests assert that, and benchmarks/ compares their throughput.

enum class KernelBackend { kSerial, kOpenMp };

// Stacked field regressors: out has 3*P rows and (3+m) columns; rows
// 3i..3i+2 hold grad Psi(points[i]). Returns the number of points outside
// the domain.
int field_regressor_batch(const GpDomain& domain, std::span<const Vec3> points,
                          KernelBackend backend, Eigen::MatrixXd& out);

// Field values M(r; eta) per point (3 x P).
int field_batch(const GpDomain& domain, const Eigen::VectorXd& eta,
                std::span<const Vec3> points, KernelBackend backend,
                Eigen::Matrix3Xd& out);

// Spatial field Jacobians per point for fixed eta.
int field_jacobian_batch(const GpDomain& domain, const Eigen::VectorXd& eta,
                         std::span<const Vec3> points, KernelBackend backend,
                         std::vector<Mat3>& out);

// Potential regressor rows Psi(points[i]) stacked as a P x (3+m) matrix.
int potential_regressor_batch(const GpDomain& domain,
                              std::span<const Vec3> points,
                              KernelBackend backend, Eigen::MatrixXd& out);

}  // namespace magnav
