#include "magnav/nav_types.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace magnav {

void ArrayGeometry::validate() const {
  const int n = size();
  if (n < 1) {
    throw std::invalid_argument("ArrayGeometry: empty");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((positions[i] - positions[j]).norm() < 1e-9) {
        throw std::invalid_argument("ArrayGeometry: duplicate sensor positions");
      }
    }
  }
  if (n >= 3) {
    Vec3 mean = Vec3::Zero();
    for (const auto& p : positions) mean += p;
    mean /= n;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& p : positions) {
      scatter += (p - mean) * (p - mean).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(scatter);
    const auto& sv = svd.singularValues();
    if (sv(1) < 1e-12 * (sv(0) + 1e-300)) {
      throw std::invalid_argument(
          "ArrayGeometry: sensors must span at least two dimensions");
    }
  }
}

ArrayGeometry ArrayGeometry::default_board() {
  constexpr int kCols = 6;
  constexpr int kRows = 5;
  constexpr double kSizeX = 0.345;
  constexpr double kSizeY = 0.245;
  ArrayGeometry g;
  g.positions.reserve(kCols * kRows);
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols; ++c) {
      const double x = -0.5 * kSizeX + kSizeX * c / (kCols - 1);
      const double y = -0.5 * kSizeY + kSizeY * r / (kRows - 1);
      g.positions.emplace_back(x, y, 0.0);
    }
  }
  return g;
}

}  // namespace magnav
