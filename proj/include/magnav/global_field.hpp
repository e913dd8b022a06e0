#pragma once

#include <Eigen/Core>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "magnav/geometry.hpp"

namespace magnav {

// Building-scale field model: the scalar potential is a Gaussian process with
// a linear plus squared-exponential kernel, approximated by Laplace
// eigenfunctions of a cuboid with Dirichlet boundary conditions. Coefficients
// eta are (3 + m): three linear-kernel weights followed by m basis weights.

struct GpHyperparams {
  double sigma_lin = 1.0;  // uT, linear-kernel magnitude
  double sigma_se = 1.0;   // SE-kernel magnitude
  double ell_se = 0.7;     // m, SE length scale
};

struct ModeTriplet {
  int nx = 1, ny = 1, nz = 1;
};

// Spectral density of the 3-D squared-exponential kernel,
//   S(lambda^2) = sigma^2 (2 pi l^2)^{3/2} exp(-lambda^2 l^2 / 2).
double se_spectral_density(const GpHyperparams& hp, double lambda_sq);

class GpDomain {
 public:
  // Cuboid [-Lx,Lx] x [-Ly,Ly] x [-Lz,Lz]. Candidate modes run up to
  // max_index[d] per axis (0 = derive a cutoff large enough for num_modes);
  // the num_modes with smallest eigenvalue are kept, ties broken
  // lexicographically on (nx, ny, nz).
  GpDomain(const Vec3& half_lengths, int num_modes, const GpHyperparams& hp,
           std::array<int, 3> max_index = {0, 0, 0});

  const Vec3& half_lengths() const { return half_lengths_; }
  const GpHyperparams& hyperparams() const { return hp_; }
  int num_modes() const { return static_cast<int>(modes_.size()); }
  int coeff_dim() const { return 3 + num_modes(); }
  const std::vector<ModeTriplet>& modes() const { return modes_; }

  double eigenvalue_sq(int j) const { return lambda_sq_[j]; }
  // psi_j(r): product over axes of sin(pi n (r_d + L_d) / (2 L_d)) / sqrt(L_d).
  double eigenfunction(int j, const Vec3& r) const;
  Vec3 eigenfunction_gradient(int j, const Vec3& r) const;

  bool contains(const Vec3& r) const;

 private:
  Vec3 half_lengths_;
  GpHyperparams hp_;
  std::vector<ModeTriplet> modes_;
  std::vector<double> lambda_sq_;
};

// Diagonal of the prior covariance Lambda over eta: three sigma_lin^2 entries
// followed by the spectral densities of the kept modes.
Eigen::VectorXd prior_covariance_diagonal(const GpDomain& domain);

// Psi(r) = [r^T psi_1(r) ... psi_m(r)], the potential regressor row.
// If out_of_domain is non-null it is set when r leaves the cuboid (evaluation
// still proceeds; the basis tapers to zero at the boundary).
Eigen::RowVectorXd potential_regressor(const GpDomain& domain, const Vec3& r,
                                       bool* out_of_domain = nullptr);

// grad Psi(r): 3 x (3+m); first block is I3, remaining columns are the
// eigenfunction gradients.
Eigen::MatrixXd field_regressor(const GpDomain& domain, const Vec3& r,
                                bool* out_of_domain = nullptr);

// M(r; eta) = grad Psi(r) eta.
Vec3 evaluate_global_field(const GpDomain& domain, const Eigen::VectorXd& eta,
                           const Vec3& r, bool* out_of_domain = nullptr);

// Spatial Jacobian dM/dr for fixed eta (the potential Hessian), used by the
// position Jacobians of the SLAM measurement models.
Mat3 global_field_jacobian(const GpDomain& domain, const Eigen::VectorXd& eta,
                           const Vec3& r);

// Sequential Bayesian regression over eta starting from the prior N(0, Lambda).
class GlobalFieldRegressor {
 public:
  explicit GlobalFieldRegressor(const GpDomain& domain);

  // Condition on a field sample y = grad Psi(r) eta + e, e ~ N(0, sigma^2 I).
  void condition(const Vec3& r, const Vec3& y, double sigma);
  // Generic rows h (k x (3+m)) with noise covariance R (k x k).
  void condition(const Eigen::MatrixXd& h, const Eigen::VectorXd& y,
                 const Eigen::MatrixXd& noise);

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const GpDomain& domain() const { return *domain_; }

 private:
  const GpDomain* domain_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

// Map export: domain metadata, mode list, eta and covariance diagonal as CSV.
// Schema documented in docs/formats.md.
void write_field_map(std::ostream& os, const GpDomain& domain,
                     const Eigen::VectorXd& eta,
                     const Eigen::VectorXd& cov_diagonal);
void write_field_map_file(const std::string& path, const GpDomain& domain,
                          const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& cov_diagonal);

// Optional plotting aid: rasterize the field on a horizontal slice.
void write_field_raster(std::ostream& os, const GpDomain& domain,
                        const Eigen::VectorXd& eta, double z_slice,
                        int nx, int ny);

}  // namespace magnav
