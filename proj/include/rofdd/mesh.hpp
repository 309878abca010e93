#pragma once

// Pixel grid, lowest-order Raviart-Thomas dof layout and the signed
// divergence / adjoint-divergence stencils.
//
// Conventions (0-based throughout):
//   * pixel (i, j) is row i, column j; row i + 1 lies "below" row i;
//   * a vertical-pair edge anchored at (i, j) separates (i, j) and (i + 1, j),
//     a horizontal-pair edge anchored at (i, j) separates (i, j) and (i, j + 1);
//   * every dof stores the normal component with the normal pointing toward
//     increasing index;
//   * global dof order: all vertical-pair edges row-major, then all
//     horizontal-pair edges row-major.
//
// Boundary edges of the image carry no dof. Subdomain-local spaces that keep
// the flux across some of their sides (the duplicated interface dofs of the
// primal-dual decomposition) are described by an EdgeLayout with "open" sides.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rofdd/errors.hpp"
#include "rofdd/vector_ops.hpp"

namespace rofdd {

struct GridDims {
  std::size_t rows = 0;
  std::size_t cols = 0;

  [[nodiscard]] std::size_t pixel_count() const { return rows * cols; }
  [[nodiscard]] bool valid() const { return rows >= 1 && cols >= 1; }
  void validate() const {
    if (!valid()) {
      throw DimensionError("grid dimensions must be positive, got " + std::to_string(rows) + "x" +
                           std::to_string(cols));
    }
  }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

inline std::string to_string(const GridDims& d) {
  return std::to_string(d.rows) + "x" + std::to_string(d.cols);
}

enum class EdgeOrientation { vertical_pair, horizontal_pair };

struct EdgeId {
  EdgeOrientation orientation = EdgeOrientation::vertical_pair;
  std::size_t i = 0;
  std::size_t j = 0;
};

/// Dof layout of a rectangular patch of pixels. A side marked open carries one
/// flux dof per pixel along it (stored first for top/left, last for
/// bottom/right); closed sides carry none.
struct EdgeLayout {
  GridDims dims;
  bool open_top = false;
  bool open_bottom = false;
  bool open_left = false;
  bool open_right = false;

  /// Number of rows of vertical-pair edges.
  [[nodiscard]] std::size_t vertical_rows() const {
    return dims.rows - 1 + (open_top ? 1 : 0) + (open_bottom ? 1 : 0);
  }
  /// Number of columns of horizontal-pair edges.
  [[nodiscard]] std::size_t horizontal_cols() const {
    return dims.cols - 1 + (open_left ? 1 : 0) + (open_right ? 1 : 0);
  }
  [[nodiscard]] std::size_t vertical_count() const { return vertical_rows() * dims.cols; }
  [[nodiscard]] std::size_t horizontal_count() const { return dims.rows * horizontal_cols(); }
  [[nodiscard]] std::size_t size() const { return vertical_count() + horizontal_count(); }
  [[nodiscard]] bool closed() const { return !(open_top || open_bottom || open_left || open_right); }

  friend bool operator==(const EdgeLayout&, const EdgeLayout&) = default;
};

inline EdgeLayout closed_layout(GridDims dims) { return EdgeLayout{dims}; }

/// Number of dofs of the global dual space.
inline std::size_t edge_count(GridDims dims) {
  dims.validate();
  return (dims.rows - 1) * dims.cols + dims.rows * (dims.cols - 1);
}

/// Position of an interior edge in the global dof order.
inline std::size_t edge_index(GridDims dims, EdgeId e) {
  dims.validate();
  if (e.orientation == EdgeOrientation::vertical_pair) {
    if (e.i + 1 >= dims.rows || e.j >= dims.cols) {
      throw DimensionError("vertical-pair edge anchored at (" + std::to_string(e.i) + "," +
                           std::to_string(e.j) + ") is not interior to a " + to_string(dims) +
                           " grid");
    }
    return e.i * dims.cols + e.j;
  }
  if (e.i >= dims.rows || e.j + 1 >= dims.cols) {
    throw DimensionError("horizontal-pair edge anchored at (" + std::to_string(e.i) + "," +
                         std::to_string(e.j) + ") is not interior to a " + to_string(dims) +
                         " grid");
  }
  return (dims.rows - 1) * dims.cols + e.i * (dims.cols - 1) + e.j;
}

/// Piecewise-constant pixel function, row-major.
struct Image {
  GridDims dims;
  std::vector<double> values;

  Image() = default;
  explicit Image(GridDims d, double fill = 0.0) : dims(d), values(d.pixel_count(), fill) {
    d.validate();
  }
  Image(GridDims d, std::vector<double> v) : dims(d), values(std::move(v)) {
    d.validate();
    vec::require_same_size(values.size(), d.pixel_count(), "Image");
  }

  [[nodiscard]] double& at(std::size_t i, std::size_t j) { return values[i * dims.cols + j]; }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return values[i * dims.cols + j]; }
  [[nodiscard]] std::span<double> span() { return values; }
  [[nodiscard]] std::span<const double> span() const { return values; }
};

/// Normal-component dofs of an element of H0(div), in global dof order.
struct DualField {
  GridDims dims;
  std::vector<double> values;

  DualField() = default;
  explicit DualField(GridDims d, double fill = 0.0) : dims(d), values(edge_count(d), fill) {}
  DualField(GridDims d, std::vector<double> v) : dims(d), values(std::move(v)) {
    vec::require_same_size(values.size(), edge_count(d), "DualField");
  }

  [[nodiscard]] double& operator[](EdgeId e) { return values[edge_index(dims, e)]; }
  [[nodiscard]] double operator[](EdgeId e) const { return values[edge_index(dims, e)]; }
  [[nodiscard]] std::span<double> span() { return values; }
  [[nodiscard]] std::span<const double> span() const { return values; }
};

namespace stencil {

/// out = div p on the pixels of the layout.
inline void div(const EdgeLayout& lay, std::span<const double> p, std::span<double> out) {
  vec::require_same_size(p.size(), lay.size(), "div (dual)");
  vec::require_same_size(out.size(), lay.dims.pixel_count(), "div (image)");
  const std::size_t m = lay.dims.rows;
  const std::size_t n = lay.dims.cols;
  const std::size_t top_shift = lay.open_top ? 1 : 0;
  const std::size_t left_shift = lay.open_left ? 1 : 0;
  const std::size_t vrows = lay.vertical_rows();
  const std::size_t hcols = lay.horizontal_cols();
  const double* vert = p.data();
  const double* horz = p.data() + lay.vertical_count();

  for (std::size_t i = 0; i < m; ++i) {
    // Edge rows below / above pixel row i, if present.
    const std::size_t below = i + top_shift;
    const bool has_below = below < vrows;
    const bool has_above = i + top_shift >= 1;
    const double* vb = has_below ? vert + below * n : nullptr;
    const double* va = has_above ? vert + (below - 1) * n : nullptr;
    const double* hr = horz + i * hcols;
    double* o = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t right = j + left_shift;
      double acc = 0.0;
      if (has_below) acc += vb[j];
      if (right < hcols) acc += hr[right];
      if (has_above) acc -= va[j];
      if (right >= 1) acc -= hr[right - 1];
      o[j] = acc;
    }
  }
}

/// out = div* u, the exact adjoint of div for the Euclidean inner products.
inline void div_adj(const EdgeLayout& lay, std::span<const double> u, std::span<double> out) {
  vec::require_same_size(u.size(), lay.dims.pixel_count(), "div_adj (image)");
  vec::require_same_size(out.size(), lay.size(), "div_adj (dual)");
  const std::size_t m = lay.dims.rows;
  const std::size_t n = lay.dims.cols;
  const std::size_t top_shift = lay.open_top ? 1 : 0;
  const std::size_t left_shift = lay.open_left ? 1 : 0;
  const std::size_t vrows = lay.vertical_rows();
  const std::size_t hcols = lay.horizontal_cols();
  double* vert = out.data();
  double* horz = out.data() + lay.vertical_count();

  for (std::size_t r = 0; r < vrows; ++r) {
    // Edge row r separates pixel rows r - top_shift (above) and r - top_shift + 1 (below).
    const bool has_above = r >= top_shift;
    const bool has_below = r + 1 - top_shift < m;
    const double* ua = has_above ? u.data() + (r - top_shift) * n : nullptr;
    const double* ub = has_below ? u.data() + (r + 1 - top_shift) * n : nullptr;
    double* v = vert + r * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      if (has_above) acc += ua[j];
      if (has_below) acc -= ub[j];
      v[j] = acc;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* ui = u.data() + i * n;
    double* h = horz + i * hcols;
    for (std::size_t c = 0; c < hcols; ++c) {
      double acc = 0.0;
      if (c >= left_shift) acc += ui[c - left_shift];
      if (c + 1 - left_shift < n) acc -= ui[c + 1 - left_shift];
      h[c] = acc;
    }
  }
}

}  // namespace stencil

inline Image div(const DualField& p) {
  Image out(p.dims);
  stencil::div(closed_layout(p.dims), p.values, out.values);
  return out;
}

inline DualField div_adj(const Image& u) {
  DualField out(u.dims);
  stencil::div_adj(closed_layout(u.dims), u.values, out.values);
  return out;
}

inline double dot_X(const Image& u, const Image& v) {
  if (u.dims != v.dims) throw DimensionError("dot_X: images on different grids");
  return vec::dot(u.values, v.values);
}

inline double dot_Y(const DualField& p, const DualField& q) {
  if (p.dims != q.dims) throw DimensionError("dot_Y: dual fields on different grids");
  return vec::dot(p.values, q.values);
}

inline double norm_X(const Image& u) { return vec::norm2(u.values); }
inline double norm_Y(const DualField& p) { return vec::norm2(p.values); }

}  // namespace rofdd
