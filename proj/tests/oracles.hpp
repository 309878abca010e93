#pragma once

// Independent reference implementations used only by the tests: dense
// matrices assembled from the edge definitions, brute-force minimizers and
// finite differences.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "rofdd/rofdd.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;  // row-major, rows x cols

struct Edge {
  bool vertical;
  std::size_t i, j;
};

/// All interior edges of an M x N grid: vertical pairs row-major, then
/// horizontal pairs row-major, enumerated by plain loops.
inline std::vector<Edge> enumerate_edges(rofdd::GridDims d) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j)
      if (i + 1 < d.rows) out.push_back({true, i, j});
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j)
      if (j + 1 < d.cols) out.push_back({false, i, j});
  return out;
}

/// Dense divergence: column e has +1 on the pixel the edge is anchored at and
/// -1 on its neighbour below / to the right.
inline Matrix dense_div(rofdd::GridDims d) {
  const auto edges = enumerate_edges(d);
  Matrix D(d.pixel_count(), std::vector<double>(edges.size(), 0.0));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& g = edges[e];
    D[g.i * d.cols + g.j][e] += 1.0;
    const std::size_t ni = g.vertical ? g.i + 1 : g.i;
    const std::size_t nj = g.vertical ? g.j : g.j + 1;
    D[ni * d.cols + nj][e] -= 1.0;
  }
  return D;
}

inline std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
  std::vector<double> y(A.size(), 0.0);
  for (std::size_t r = 0; r < A.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += A[r][c] * x[c];
  return y;
}

inline std::vector<double> matvec_t(const Matrix& A, const std::vector<double>& x) {
  std::vector<double> y(A.empty() ? 0 : A[0].size(), 0.0);
  for (std::size_t r = 0; r < A.size(); ++r)
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += A[r][c] * x[r];
  return y;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline rofdd::Image random_image(rofdd::GridDims d, std::mt19937_64& rng) {
  return rofdd::Image(d, random_vector(d.pixel_count(), rng, 0.0, 1.0));
}

inline rofdd::DualField random_field(rofdd::GridDims d, std::mt19937_64& rng, double scale = 1.0) {
  auto v = random_vector(rofdd::edge_count(d), rng, -scale, scale);
  return rofdd::DualField(d, std::move(v));
}

/// Largest eigenvalue of A^T A by power iteration on x -> A^T (A x).
inline double power_iteration(const std::function<std::vector<double>(const std::vector<double>&)>& ata,
                              std::size_t n, std::size_t iters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> x = random_vector(n, rng);
  double lambda = 0.0;
  for (std::size_t k = 0; k < iters; ++k) {
    double nx = 0.0;
    for (double v : x) nx += v * v;
    nx = std::sqrt(nx);
    for (double& v : x) v /= nx;
    const auto y = ata(x);
    lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += x[i] * y[i];
    x = y;
  }
  return lambda;
}

/// Central finite-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    const double fp = fn(x);
    x[k] = x0 - h;
    const double fm = fn(x);
    x[k] = x0;
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

/// Projected gradient on min 1/2 x^T H x - b^T x + c subject to |x_k| <= 1,
/// with H given densely. Plain (non-accelerated) iteration with step 1/L.
inline std::vector<double> box_qp(const Matrix& H, const std::vector<double>& b, double L,
                                  std::size_t iters) {
  std::vector<double> x(b.size(), 0.0);
  for (std::size_t it = 0; it < iters; ++it) {
    const auto hx = matvec(H, x);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = std::clamp(x[k] - (hx[k] - b[k]) / L, -1.0, 1.0);
    }
  }
  return x;
}

/// Anisotropic TV energy from the forward-difference definition.
inline double rof_energy(const rofdd::Image& u, const rofdd::Image& f, double alpha) {
  const auto d = u.dims;
  double fid = 0.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      const double r = u.at(i, j) - f.at(i, j);
      fid += r * r;
      if (i + 1 < d.rows) tv += std::abs(u.at(i + 1, j) - u.at(i, j));
      if (j + 1 < d.cols) tv += std::abs(u.at(i, j + 1) - u.at(i, j));
    }
  }
  return 0.5 * alpha * fid + tv;
}

/// Piecewise-constant test scene with a disc and a rectangle.
inline rofdd::Image scene(rofdd::GridDims d) {
  rofdd::Image g(d);
  for (std::size_t i = 0; i < d.rows; ++i) {
    for (std::size_t j = 0; j < d.cols; ++j) {
      const double y = (i + 0.5) / d.rows;
      const double x = (j + 0.5) / d.cols;
      double v = 0.25;
      if ((x - 0.35) * (x - 0.35) + (y - 0.4) * (y - 0.4) < 0.06) v = 0.8;
      if (x > 0.55 && x < 0.85 && y > 0.5 && y < 0.8) v = 0.55;
      g.at(i, j) = v;
    }
  }
  return g;
}

}  // namespace oracle
