#include "magnav/global_field.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "basis_detail.hpp"
#include "magnav/errors.hpp"

namespace magnav {

double se_spectral_density(const GpHyperparams& hp, double lambda_sq) {
  const double l2 = hp.ell_se * hp.ell_se;
  return hp.sigma_se * hp.sigma_se * std::pow(2.0 * M_PI * l2, 1.5) *
         std::exp(-0.5 * lambda_sq * l2);
}

namespace {

void validate_hyperparams(const GpHyperparams& hp) {
  if (!(hp.sigma_lin > 0.0) || !(hp.sigma_se > 0.0) || !(hp.ell_se > 0.0)) {
    throw NonPositiveHyperparameter(
        "GpDomain: sigma_lin, sigma_se and ell_se must all be positive");
  }
}

double mode_lambda_sq(const Vec3& half, const ModeTriplet& n) {
  const double kx = M_PI * n.nx / (2.0 * half.x());
  const double ky = M_PI * n.ny / (2.0 * half.y());
  const double kz = M_PI * n.nz / (2.0 * half.z());
  return kx * kx + ky * ky + kz * kz;
}

}  // namespace

GpDomain::GpDomain(const Vec3& half_lengths, int num_modes,
                   const GpHyperparams& hp, std::array<int, 3> max_index)
    : half_lengths_(half_lengths), hp_(hp) {
  if (!(half_lengths.minCoeff() > 0.0)) {
    throw std::invalid_argument("GpDomain: half lengths must be positive");
  }
  if (num_modes < 0) {
    throw std::invalid_argument("GpDomain: num_modes must be >= 0");
  }
  validate_hyperparams(hp);

  if (max_index == std::array<int, 3>{0, 0, 0} && num_modes > 0) {
    // Per-axis cutoff sized so the candidate set covers the eigenvalue ball
    // holding num_modes modes, with headroom for the boundary of the ball.
    const double volume = half_lengths.prod();
    const double lambda_max =
        std::cbrt(3.0 * M_PI * M_PI * (2.0 * num_modes + 16.0) / (4.0 * volume));
    for (int d = 0; d < 3; ++d) {
      max_index[d] = std::max(
          1, static_cast<int>(std::ceil(2.0 * half_lengths[d] * lambda_max / M_PI)) + 1);
    }
  }

  std::vector<std::pair<double, ModeTriplet>> candidates;
  candidates.reserve(static_cast<size_t>(std::max(max_index[0], 1)) *
                     std::max(max_index[1], 1) * std::max(max_index[2], 1));
  for (int nx = 1; nx <= max_index[0]; ++nx) {
    for (int ny = 1; ny <= max_index[1]; ++ny) {
      for (int nz = 1; nz <= max_index[2]; ++nz) {
        const ModeTriplet t{nx, ny, nz};
        candidates.emplace_back(mode_lambda_sq(half_lengths_, t), t);
      }
    }
  }
  if (static_cast<int>(candidates.size()) < num_modes) {
    throw std::invalid_argument(
        "GpDomain: max_index yields fewer candidate modes than num_modes");
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.first, a.second.nx, a.second.ny, a.second.nz) <
                     std::tie(b.first, b.second.nx, b.second.ny, b.second.nz);
            });
  modes_.reserve(num_modes);
  lambda_sq_.reserve(num_modes);
  for (int j = 0; j < num_modes; ++j) {
    modes_.push_back(candidates[j].second);
    lambda_sq_.push_back(candidates[j].first);
  }
}

double GpDomain::eigenfunction(int j, const Vec3& r) const {
  const ModeTriplet& n = modes_[j];
  const auto tx = detail::axis_term(half_lengths_.x(), n.nx, r.x());
  const auto ty = detail::axis_term(half_lengths_.y(), n.ny, r.y());
  const auto tz = detail::axis_term(half_lengths_.z(), n.nz, r.z());
  return detail::mode_value(tx, ty, tz);
}

Vec3 GpDomain::eigenfunction_gradient(int j, const Vec3& r) const {
  const ModeTriplet& n = modes_[j];
  const auto tx = detail::axis_term(half_lengths_.x(), n.nx, r.x());
  const auto ty = detail::axis_term(half_lengths_.y(), n.ny, r.y());
  const auto tz = detail::axis_term(half_lengths_.z(), n.nz, r.z());
  Vec3 g;
  detail::mode_gradient(tx, ty, tz, &g.x(), &g.y(), &g.z());
  return g;
}

bool GpDomain::contains(const Vec3& r) const {
  return std::abs(r.x()) <= half_lengths_.x() &&
         std::abs(r.y()) <= half_lengths_.y() &&
         std::abs(r.z()) <= half_lengths_.z();
}

Eigen::VectorXd prior_covariance_diagonal(const GpDomain& domain) {
  Eigen::VectorXd diag(domain.coeff_dim());
  const double lin_var = domain.hyperparams().sigma_lin * domain.hyperparams().sigma_lin;
  diag.head<3>().setConstant(lin_var);
  for (int j = 0; j < domain.num_modes(); ++j) {
    diag(3 + j) = se_spectral_density(domain.hyperparams(), domain.eigenvalue_sq(j));
  }
  return diag;
}

Eigen::RowVectorXd potential_regressor(const GpDomain& domain, const Vec3& r,
                                       bool* out_of_domain) {
  if (out_of_domain != nullptr) {
    *out_of_domain = !domain.contains(r);
  }
  Eigen::RowVectorXd row(domain.coeff_dim());
  row.head<3>() = r.transpose();
  for (int j = 0; j < domain.num_modes(); ++j) {
    row(3 + j) = domain.eigenfunction(j, r);
  }
  return row;
}

Eigen::MatrixXd field_regressor(const GpDomain& domain, const Vec3& r,
                                bool* out_of_domain) {
  if (out_of_domain != nullptr) {
    *out_of_domain = !domain.contains(r);
  }
  Eigen::MatrixXd reg(3, domain.coeff_dim());
  reg.leftCols<3>() = Mat3::Identity();
  for (int j = 0; j < domain.num_modes(); ++j) {
    reg.col(3 + j) = domain.eigenfunction_gradient(j, r);
  }
  return reg;
}

Vec3 evaluate_global_field(const GpDomain& domain, const Eigen::VectorXd& eta,
                           const Vec3& r, bool* out_of_domain) {
  if (out_of_domain != nullptr) {
    *out_of_domain = !domain.contains(r);
  }
  Vec3 m = eta.head<3>();
  for (int j = 0; j < domain.num_modes(); ++j) {
    m += eta(3 + j) * domain.eigenfunction_gradient(j, r);
  }
  return m;
}

Mat3 global_field_jacobian(const GpDomain& domain, const Eigen::VectorXd& eta,
                           const Vec3& r) {
  Mat3 jac = Mat3::Zero();
  double h[6];
  for (int j = 0; j < domain.num_modes(); ++j) {
    const ModeTriplet& n = domain.modes()[j];
    const auto tx = detail::axis_term(domain.half_lengths().x(), n.nx, r.x());
    const auto ty = detail::axis_term(domain.half_lengths().y(), n.ny, r.y());
    const auto tz = detail::axis_term(domain.half_lengths().z(), n.nz, r.z());
    detail::mode_hessian(tx, ty, tz, h);
    const double w = eta(3 + j);
    jac(0, 0) += w * h[0];
    jac(1, 1) += w * h[1];
    jac(2, 2) += w * h[2];
    jac(0, 1) += w * h[3];
    jac(0, 2) += w * h[4];
    jac(1, 2) += w * h[5];
  }
  jac(1, 0) = jac(0, 1);
  jac(2, 0) = jac(0, 2);
  jac(2, 1) = jac(1, 2);
  return jac;
}

GlobalFieldRegressor::GlobalFieldRegressor(const GpDomain& domain)
    : domain_(&domain),
      mean_(Eigen::VectorXd::Zero(domain.coeff_dim())),
      cov_(prior_covariance_diagonal(domain).asDiagonal()) {}

void GlobalFieldRegressor::condition(const Vec3& r, const Vec3& y, double sigma) {
  condition(field_regressor(*domain_, r), y,
            Mat3::Identity() * (sigma * sigma));
}

void GlobalFieldRegressor::condition(const Eigen::MatrixXd& h,
                                     const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& noise) {
  const Eigen::MatrixXd pht = cov_ * h.transpose();
  const Eigen::MatrixXd s = h * pht + noise;
  const Eigen::MatrixXd gain = s.ldlt().solve(pht.transpose()).transpose();
  mean_ += gain * (y - h * mean_);
  const Eigen::MatrixXd ikh =
      Eigen::MatrixXd::Identity(cov_.rows(), cov_.cols()) - gain * h;
  cov_ = ikh * cov_ * ikh.transpose() + gain * noise * gain.transpose();
}

void write_field_map(std::ostream& os, const GpDomain& domain,
                     const Eigen::VectorXd& eta,
                     const Eigen::VectorXd& cov_diagonal) {
  const auto& hp = domain.hyperparams();
  os.precision(17);
  os << "# magnav field map v1\n";
  os << "half_lengths," << domain.half_lengths().x() << ','
     << domain.half_lengths().y() << ',' << domain.half_lengths().z() << '\n';
  os << "hyperparams," << hp.sigma_lin << ',' << hp.sigma_se << ',' << hp.ell_se
     << '\n';
  os << "num_modes," << domain.num_modes() << '\n';
  os << "mode,nx,ny,nz,lambda_sq\n";
  for (int j = 0; j < domain.num_modes(); ++j) {
    const auto& n = domain.modes()[j];
    os << j << ',' << n.nx << ',' << n.ny << ',' << n.nz << ','
       << domain.eigenvalue_sq(j) << '\n';
  }
  os << "coeff,eta,cov_diag\n";
  for (int i = 0; i < domain.coeff_dim(); ++i) {
    os << i << ',' << eta(i) << ',' << cov_diagonal(i) << '\n';
  }
}

void write_field_map_file(const std::string& path, const GpDomain& domain,
                          const Eigen::VectorXd& eta,
                          const Eigen::VectorXd& cov_diagonal) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("write_field_map_file: cannot open " + path);
  }
  write_field_map(os, domain, eta, cov_diagonal);
}

void write_field_raster(std::ostream& os, const GpDomain& domain,
                        const Eigen::VectorXd& eta, double z_slice, int nx,
                        int ny) {
  os.precision(10);
  os << "x,y,z,bx,by,bz,bnorm\n";
  const Vec3 half = domain.half_lengths();
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double x = -half.x() + 2.0 * half.x() * ix / std::max(nx - 1, 1);
      const double y = -half.y() + 2.0 * half.y() * iy / std::max(ny - 1, 1);
      const Vec3 b = evaluate_global_field(domain, eta, Vec3(x, y, z_slice));
      os << x << ',' << y << ',' << z_slice << ',' << b.x() << ',' << b.y()
         << ',' << b.z() << ',' << b.norm() << '\n';
    }
  }
}

}  // namespace magnav
