#pragma once

// Pointwise feasible sets of the dual variable and their Euclidean projections.
//   p = 1 (anisotropic TV):  |p_e| <= 1 for every dof e;
//   p = 2 (isotropic TV):    each pixel's pair (edge below, edge right) lies in
//                            the unit Euclidean disc.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "rofdd/errors.hpp"
#include "rofdd/mesh.hpp"

namespace rofdd {

enum class PNorm { one = 1, two = 2 };

inline PNorm pnorm_from_int(int p) {
  if (p == 1) return PNorm::one;
  if (p == 2) return PNorm::two;
  throw ParameterError("pnorm must be 1 or 2, got " + std::to_string(p));
}

inline int to_int(PNorm pn) { return static_cast<int>(pn); }

namespace stencil {

inline constexpr double kDiscSlack = 8.0 * std::numeric_limits<double>::epsilon();

inline void project_c1(std::span<double> p) {
  for (double& v : p) v = v / std::max(1.0, std::abs(v));
}

/// Pairwise disc projection on a closed layout; the pair of pixel (i, j) is its
/// bottom and right edge, with missing edges treated as zero.
inline void project_c2(const EdgeLayout& lay, std::span<double> p) {
  if (!lay.closed()) throw ParameterError("isotropic projection needs a closed layout");
  vec::require_same_size(p.size(), lay.size(), "project_C2");
  const std::size_t m = lay.dims.rows;
  const std::size_t n = lay.dims.cols;
  double* vert = p.data();
  double* horz = p.data() + lay.vertical_count();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double* a = i + 1 < m ? vert + i * n + j : nullptr;
      double* b = j + 1 < n ? horz + i * (n - 1) + j : nullptr;
      const double va = a ? *a : 0.0;
      const double vb = b ? *b : 0.0;
      const double norm = std::hypot(va, vb);
      // Pairs already within rounding of the unit circle stay untouched, which
      // makes the projection exactly idempotent.
      if (norm <= 1.0 + kDiscSlack) continue;
      if (a) *a = va / norm;
      if (b) *b = vb / norm;
    }
  }
}

inline void project(const EdgeLayout& lay, PNorm pn, std::span<double> p) {
  if (pn == PNorm::one) {
    project_c1(p);
  } else {
    project_c2(lay, p);
  }
}

}  // namespace stencil

inline DualField project_C1(DualField p) {
  stencil::project_c1(p.values);
  return p;
}

inline DualField project_C2(DualField p) {
  stencil::project_c2(closed_layout(p.dims), p.values);
  return p;
}

inline DualField project(DualField p, PNorm pn) {
  stencil::project(closed_layout(p.dims), pn, p.values);
  return p;
}

inline bool is_feasible(const DualField& p, PNorm pn, double tol) {
  if (tol < 0.0) throw ParameterError("is_feasible: tolerance must be nonnegative");
  if (pn == PNorm::one) {
    for (double v : p.values) {
      if (!(std::abs(v) <= 1.0 + tol)) return false;
    }
    return true;
  }
  const std::size_t m = p.dims.rows;
  const std::size_t n = p.dims.cols;
  const std::size_t nv = (m - 1) * n;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double va = i + 1 < m ? p.values[i * n + j] : 0.0;
      const double vb = j + 1 < n ? p.values[nv + i * (n - 1) + j] : 0.0;
      if (!(std::hypot(va, vb) <= 1.0 + tol)) return false;
    }
  }
  return true;
}

}  // namespace rofdd
