#pragma once

// Checkerboard partition of the pixel grid into rectangular subdomains and the
// index bookkeeping shared by both decomposition methods:
//
//   * interior dofs I_s: edges strictly inside subdomain s (local space Y_s,
//     zero flux across the whole subdomain boundary);
//   * interface dofs I_Gamma: edges on the boundary between two subdomains;
//   * tilde slots: the dofs of subdomain s including its interface edges, so
//     each interface dof is duplicated in the two subdomains sharing it.
//
// Every dof keeps the global orientation (normal toward increasing index), so
// the jump of a duplicated dof is simply (value in s) - (value in t), s < t.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rofdd/errors.hpp"
#include "rofdd/mesh.hpp"
#include "rofdd/solvers.hpp"
#include "rofdd/vector_ops.hpp"

namespace rofdd {

struct SubdomainGrid {
  std::size_t rows = 1;
  std::size_t cols = 1;
  [[nodiscard]] std::size_t count() const { return rows * cols; }
  friend bool operator==(const SubdomainGrid&, const SubdomainGrid&) = default;
};

struct PixelRect {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  [[nodiscard]] GridDims dims() const { return {rows, cols}; }
};

/// Values indexed by interface dofs, in the order of Decomposition::interface_dofs.
struct InterfaceVector {
  std::vector<double> values;

  InterfaceVector() = default;
  explicit InterfaceVector(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit InterfaceVector(std::vector<double> v) : values(std::move(v)) {}
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

/// Direct sum of per-subdomain fields in tilde-slot order.
struct TildeField {
  std::vector<std::vector<double>> parts;
};

/// The two owners of an interface dof, s < t, and its slot in each owner's tilde map.
struct InterfaceLink {
  std::size_t global = 0;
  std::size_t s = 0;
  std::size_t slot_s = 0;
  std::size_t t = 0;
  std::size_t slot_t = 0;
  int sign = 1;  // orientation of the stored normal relative to n_st
};

class Decomposition {
 public:
  GridDims dims;
  SubdomainGrid nsub;
  std::vector<PixelRect> rects;
  /// interior_dofs[s][k]: global dof of slot k of the closed local layout of s.
  std::vector<std::vector<std::size_t>> interior_dofs;
  /// Global dofs on the interfaces, ascending.
  std::vector<std::size_t> interface_dofs;
  std::vector<EdgeLayout> tilde_layouts;
  /// tilde_maps[s][k]: global dof of tilde slot k of subdomain s.
  std::vector<std::vector<std::size_t>> tilde_maps;
  std::vector<InterfaceLink> interface_pairs;

  [[nodiscard]] std::size_t subdomain_count() const { return rects.size(); }
  [[nodiscard]] std::size_t interface_size() const { return interface_dofs.size(); }
  [[nodiscard]] EdgeLayout interior_layout(std::size_t s) const {
    return closed_layout(rects[s].dims());
  }

  /// Copies the pixels of subdomain s out of a global image.
  [[nodiscard]] std::vector<double> extract(std::span<const double> image, std::size_t s) const {
    const PixelRect& r = rects[s];
    std::vector<double> out(r.rows * r.cols);
    for (std::size_t i = 0; i < r.rows; ++i) {
      const double* src = image.data() + (r.row0 + i) * dims.cols + r.col0;
      std::copy(src, src + r.cols, out.begin() + static_cast<std::ptrdiff_t>(i * r.cols));
    }
    return out;
  }

  /// Writes the pixels of subdomain s into a global image.
  void insert(std::span<const double> part, std::size_t s, std::span<double> image) const {
    const PixelRect& r = rects[s];
    for (std::size_t i = 0; i < r.rows; ++i) {
      std::copy(part.begin() + static_cast<std::ptrdiff_t>(i * r.cols),
                part.begin() + static_cast<std::ptrdiff_t>((i + 1) * r.cols),
                image.begin() + static_cast<std::ptrdiff_t>((r.row0 + i) * dims.cols + r.col0));
    }
  }

  [[nodiscard]] TildeField zero_tilde() const {
    TildeField t;
    t.parts.reserve(rects.size());
    for (const auto& m : tilde_maps) t.parts.emplace_back(m.size(), 0.0);
    return t;
  }
};

namespace detail {

/// Start offsets of `parts` nearly equal blocks of `extent`; the remainder goes
/// to the last block.
inline std::vector<std::size_t> block_starts(std::size_t extent, std::size_t parts) {
  std::vector<std::size_t> starts(parts + 1);
  const std::size_t base = extent / parts;
  for (std::size_t k = 0; k < parts; ++k) starts[k] = k * base;
  starts[parts] = extent;
  return starts;
}

}  // namespace detail

/// Builds the checkerboard decomposition. Along an axis that is split, every
/// subdomain must be at least two pixels wide (the interface divergence bound
/// ||div||^2 <= 4 on interface fields relies on it).
inline Decomposition build_decomposition(GridDims dims, SubdomainGrid nsub) {
  dims.validate();
  if (nsub.rows < 1 || nsub.cols < 1) {
    throw DecompositionError("subdomain grid must be at least 1x1");
  }
  auto check_axis = [](std::size_t extent, std::size_t parts, const char* axis) {
    if (parts > 1 && extent / parts < 2) {
      throw DecompositionError(std::string("splitting ") + std::to_string(extent) + " " + axis +
                               " into " + std::to_string(parts) +
                               " subdomains leaves subdomains narrower than 2 pixels; each "
                               "subdomain must contain at least 2x2 pixels");
    }
  };
  check_axis(dims.rows, nsub.rows, "rows");
  check_axis(dims.cols, nsub.cols, "columns");

  Decomposition d;
  d.dims = dims;
  d.nsub = nsub;
  const auto row_starts = detail::block_starts(dims.rows, nsub.rows);
  const auto col_starts = detail::block_starts(dims.cols, nsub.cols);

  // Interface classification of every global dof.
  constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::vector<char> row_cut(dims.rows, 0);  // row_cut[i]: rows i and i+1 in different blocks
  std::vector<char> col_cut(dims.cols, 0);
  for (std::size_t a = 1; a < nsub.rows; ++a) row_cut[row_starts[a] - 1] = 1;
  for (std::size_t b = 1; b < nsub.cols; ++b) col_cut[col_starts[b] - 1] = 1;
  const std::size_t ne = edge_count(dims);
  std::vector<std::size_t> gamma_pos(ne, npos);
  for (std::size_t i = 0; i + 1 < dims.rows; ++i) {
    if (!row_cut[i]) continue;
    for (std::size_t j = 0; j < dims.cols; ++j) {
      const std::size_t g = edge_index(dims, {EdgeOrientation::vertical_pair, i, j});
      gamma_pos[g] = 0;
    }
  }
  for (std::size_t j = 0; j + 1 < dims.cols; ++j) {
    if (!col_cut[j]) continue;
    for (std::size_t i = 0; i < dims.rows; ++i) {
      const std::size_t g = edge_index(dims, {EdgeOrientation::horizontal_pair, i, j});
      gamma_pos[g] = 0;
    }
  }
  for (std::size_t g = 0; g < ne; ++g) {
    if (gamma_pos[g] != npos) {
      gamma_pos[g] = d.interface_dofs.size();
      d.interface_dofs.push_back(g);
    }
  }
  d.interface_pairs.resize(d.interface_dofs.size());
  std::vector<char> first_owner_seen(d.interface_dofs.size(), 0);

  for (std::size_t a = 0; a < nsub.rows; ++a) {
    for (std::size_t b = 0; b < nsub.cols; ++b) {
      const std::size_t s = a * nsub.cols + b;
      PixelRect r{row_starts[a], col_starts[b], row_starts[a + 1] - row_starts[a],
                  col_starts[b + 1] - col_starts[b]};
      d.rects.push_back(r);

      std::vector<std::size_t> interior;
      interior.reserve(edge_count(r.dims()));
      for (std::size_t i = 0; i + 1 < r.rows; ++i) {
        for (std::size_t j = 0; j < r.cols; ++j) {
          interior.push_back(
              edge_index(dims, {EdgeOrientation::vertical_pair, r.row0 + i, r.col0 + j}));
        }
      }
      for (std::size_t i = 0; i < r.rows; ++i) {
        for (std::size_t j = 0; j + 1 < r.cols; ++j) {
          interior.push_back(
              edge_index(dims, {EdgeOrientation::horizontal_pair, r.row0 + i, r.col0 + j}));
        }
      }
      d.interior_dofs.push_back(std::move(interior));

      EdgeLayout lay{r.dims(), a > 0, a + 1 < nsub.rows, b > 0, b + 1 < nsub.cols};
      std::vector<std::size_t> tmap;
      tmap.reserve(lay.size());
      const std::size_t top = lay.open_top ? 1 : 0;
      const std::size_t left = lay.open_left ? 1 : 0;
      for (std::size_t rr = 0; rr < lay.vertical_rows(); ++rr) {
        for (std::size_t j = 0; j < r.cols; ++j) {
          tmap.push_back(
              edge_index(dims, {EdgeOrientation::vertical_pair, r.row0 + rr - top, r.col0 + j}));
        }
      }
      for (std::size_t i = 0; i < r.rows; ++i) {
        for (std::size_t c = 0; c < lay.horizontal_cols(); ++c) {
          tmap.push_back(
              edge_index(dims, {EdgeOrientation::horizontal_pair, r.row0 + i, r.col0 + c - left}));
        }
      }
      for (std::size_t k = 0; k < tmap.size(); ++k) {
        const std::size_t gp = gamma_pos[tmap[k]];
        if (gp == npos) continue;
        // Subdomains are visited in increasing index, so the first owner is s.
        InterfaceLink& link = d.interface_pairs[gp];
        if (!first_owner_seen[gp]) {
          first_owner_seen[gp] = 1;
          link.global = tmap[k];
          link.s = s;
          link.slot_s = k;
        } else {
          link.t = s;
          link.slot_t = k;
        }
      }
      d.tilde_layouts.push_back(lay);
      d.tilde_maps.push_back(std::move(tmap));
    }
  }
  return d;
}

/// Splits p into per-subdomain interior parts and its interface part.
struct RestrictedField {
  std::vector<std::vector<double>> interior;
  InterfaceVector interface;
};

inline RestrictedField restrict_field(const DualField& p, const Decomposition& d) {
  if (p.dims != d.dims) throw DimensionError("restrict: grid mismatch");
  RestrictedField r;
  r.interior.reserve(d.subdomain_count());
  for (const auto& ids : d.interior_dofs) {
    std::vector<double> part(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) part[k] = p.values[ids[k]];
    r.interior.push_back(std::move(part));
  }
  r.interface = InterfaceVector(d.interface_size());
  for (std::size_t g = 0; g < d.interface_size(); ++g) {
    r.interface.values[g] = p.values[d.interface_dofs[g]];
  }
  return r;
}

/// p_I (+) p_Gamma.
inline DualField assemble(std::span<const std::vector<double>> interior,
                          const InterfaceVector& gamma, const Decomposition& d) {
  if (interior.size() != d.subdomain_count()) {
    throw DimensionError("assemble: wrong number of interior parts");
  }
  vec::require_same_size(gamma.size(), d.interface_size(), "assemble interface");
  DualField p(d.dims);
  for (std::size_t s = 0; s < interior.size(); ++s) {
    const auto& ids = d.interior_dofs[s];
    vec::require_same_size(interior[s].size(), ids.size(), "assemble interior");
    for (std::size_t k = 0; k < ids.size(); ++k) p.values[ids[k]] = interior[s][k];
  }
  for (std::size_t g = 0; g < gamma.size(); ++g) p.values[d.interface_dofs[g]] = gamma.values[g];
  return p;
}

/// The field 0_I (+) p_Gamma.
inline DualField assemble_interface(const InterfaceVector& gamma, const Decomposition& d) {
  vec::require_same_size(gamma.size(), d.interface_size(), "assemble interface");
  DualField p(d.dims);
  for (std::size_t g = 0; g < gamma.size(); ++g) p.values[d.interface_dofs[g]] = gamma.values[g];
  return p;
}

/// Restriction of each subdomain's view of p (interface dofs duplicated).
inline TildeField split_tilde(const DualField& p, const Decomposition& d) {
  if (p.dims != d.dims) throw DimensionError("split_tilde: grid mismatch");
  TildeField t;
  t.parts.reserve(d.subdomain_count());
  for (const auto& map : d.tilde_maps) {
    std::vector<double> part(map.size());
    for (std::size_t k = 0; k < map.size(); ++k) part[k] = p.values[map[k]];
    t.parts.push_back(std::move(part));
  }
  return t;
}

inline void check_tilde_shape(const TildeField& pt, const Decomposition& d) {
  if (pt.parts.size() != d.subdomain_count()) {
    throw DimensionError("tilde field: wrong number of subdomain parts");
  }
  for (std::size_t s = 0; s < pt.parts.size(); ++s) {
    vec::require_same_size(pt.parts[s].size(), d.tilde_maps[s].size(), "tilde field part");
  }
}

/// B p~: per interface dof, (value in s) - (value in t).
inline InterfaceVector jump_B(const TildeField& pt, const Decomposition& d) {
  check_tilde_shape(pt, d);
  InterfaceVector j(d.interface_size());
  for (std::size_t g = 0; g < d.interface_pairs.size(); ++g) {
    const InterfaceLink& l = d.interface_pairs[g];
    j.values[g] = l.sign * (pt.parts[l.s][l.slot_s] - pt.parts[l.t][l.slot_t]);
  }
  return j;
}

/// B* lambda: scatters +lambda into the s slot and -lambda into the t slot.
inline TildeField jump_B_adj(const InterfaceVector& lambda, const Decomposition& d) {
  vec::require_same_size(lambda.size(), d.interface_size(), "jump_B_adj");
  TildeField t = d.zero_tilde();
  for (std::size_t g = 0; g < d.interface_pairs.size(); ++g) {
    const InterfaceLink& l = d.interface_pairs[g];
    t.parts[l.s][l.slot_s] += l.sign * lambda.values[g];
    t.parts[l.t][l.slot_t] -= l.sign * lambda.values[g];
  }
  return t;
}

/// Inverse of split_tilde on conforming fields. Rejects fields whose largest
/// interface jump exceeds tol.
inline DualField merge_tilde(const TildeField& pt, const Decomposition& d, double tol) {
  check_tilde_shape(pt, d);
  const InterfaceVector j = jump_B(pt, d);
  const double worst = vec::max_abs(j.values);
  if (!(worst <= tol)) {
    throw DimensionError("merge_tilde: interface jump " + std::to_string(worst) +
                         " exceeds tolerance " + std::to_string(tol));
  }
  DualField p(d.dims);
  // Owners are visited in decreasing index so each interface dof ends up with
  // the value stored by its lower-index owner s.
  for (std::size_t s = d.subdomain_count(); s-- > 0;) {
    const auto& map = d.tilde_maps[s];
    for (std::size_t k = 0; k < map.size(); ++k) p.values[map[k]] = pt.parts[s][k];
  }
  return p;
}

/// Sum over subdomains of the local dual energies of a tilde field.
inline double tilde_energy(const TildeField& pt, const Image& f, double alpha,
                           const Decomposition& d) {
  check_tilde_shape(pt, d);
  if (f.dims != d.dims) throw DimensionError("tilde_energy: grid mismatch");
  double total = 0.0;
  for (std::size_t s = 0; s < d.subdomain_count(); ++s) {
    const auto fs = d.extract(f.values, s);
    total += stencil::dual_energy(d.tilde_layouts[s], pt.parts[s], fs, alpha);
  }
  return total;
}

/// Per-subdomain local divergence of a tilde field, assembled into a global image.
inline Image tilde_div(const TildeField& pt, const Decomposition& d) {
  check_tilde_shape(pt, d);
  Image out(d.dims);
  for (std::size_t s = 0; s < d.subdomain_count(); ++s) {
    std::vector<double> local(d.rects[s].rows * d.rects[s].cols);
    stencil::div(d.tilde_layouts[s], pt.parts[s], local);
    d.insert(local, s, out.values);
  }
  return out;
}

}  // namespace rofdd
