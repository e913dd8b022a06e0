#pragma once

#include <cmath>

// Shared per-axis evaluation for the cuboid Laplace eigenfunctions. Both the
// serial reference loops and the table-based OpenMP kernels go through these
// helpers with the same multiplication grouping, so the two backends return
// bitwise-identical values.

namespace magnav::detail {

struct AxisTerm {
  double s = 0.0;  // sin(w) / sqrt(L)
  double c = 0.0;  // (pi n / (2L)) cos(w) / sqrt(L)
  double k = 0.0;  // pi n / (2L)
};

inline AxisTerm axis_term(double half_length, int n, double coord) {
  AxisTerm t;
  t.k = M_PI * static_cast<double>(n) / (2.0 * half_length);
  const double w = t.k * (coord + half_length);
  const double inv_sqrt = 1.0 / std::sqrt(half_length);
  t.s = inv_sqrt * std::sin(w);
  t.c = t.k * (inv_sqrt * std::cos(w));
  return t;
}

inline double mode_value(const AxisTerm& x, const AxisTerm& y, const AxisTerm& z) {
  return (x.s * y.s) * z.s;
}

inline void mode_gradient(const AxisTerm& x, const AxisTerm& y, const AxisTerm& z,
                          double* gx, double* gy, double* gz) {
  *gx = (x.c * y.s) * z.s;
  *gy = (x.s * y.c) * z.s;
  *gz = (x.s * y.s) * z.c;
}

// Symmetric Hessian entries of one eigenfunction.
inline void mode_hessian(const AxisTerm& x, const AxisTerm& y, const AxisTerm& z,
                         double h[6]) {
  const double v = mode_value(x, y, z);
  h[0] = -(x.k * x.k) * v;   // xx
  h[1] = -(y.k * y.k) * v;   // yy
  h[2] = -(z.k * z.k) * v;   // zz
  h[3] = (x.c * y.c) * z.s;  // xy
  h[4] = (x.c * y.s) * z.c;  // xz
  h[5] = (x.s * y.c) * z.c;  // yz
}

}  // namespace magnav::detail
