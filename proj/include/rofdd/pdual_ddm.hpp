#pragma once

// Primal-dual domain decomposition. Interface dofs are duplicated in the two
// neighbouring subdomains and continuity is enforced by a multiplier lambda:
//
//   min_{p~ in C~} max_lambda  J~(p~) + <B p~, lambda>
//
// Each outer step updates lambda with the extrapolated jump and then solves one
// strongly convex local problem per subdomain,
//
//   min  J_s(p~_s) + chi(p~_s) + 1/(2 tau) ||p~_s - p^_s||^2,
//   p^ = p~^(n) - tau B* lambda^(n+1),
//
// with the linearly convergent primal-dual kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rofdd/constraints.hpp"
#include "rofdd/decomposition.hpp"
#include "rofdd/errors.hpp"
#include "rofdd/mesh.hpp"
#include "rofdd/parallel.hpp"
#include "rofdd/report.hpp"
#include "rofdd/solvers.hpp"

namespace rofdd {

struct PdualDdmParams {
  SolverParams outer;  // alpha, L (>= 2), sigma, tau (sigma tau = 1/L), rel_tol, max_iter
  SolverParams inner;  // linear primal-dual parameters; inner.tau is taken from outer.tau
  std::size_t workers = 1;
};

/// L = 2, sigma = 0.02, tau = 1/(L sigma) = 25, outer tol 1e-3; local solves
/// with L = 8, gamma = alpha/2, delta = 1/tau and inner tol 1e-5.
inline PdualDdmParams pdual_ddm_defaults(double alpha) {
  PdualDdmParams p;
  p.outer.alpha = alpha;
  p.outer.lipschitz_L = 2.0;
  p.outer.sigma = 0.02;
  p.outer.tau = 1.0 / (p.outer.lipschitz_L * p.outer.sigma);
  p.outer.rel_tol = 1e-3;
  p.outer.max_iter = 1000;
  p.inner = linear_pd_defaults(alpha, p.outer.tau);
  p.inner.rel_tol = 1e-5;
  p.inner.max_iter = 100000;
  return p;
}

/// Validates and returns the local step sizes.
inline LinearPdSteps validate_pdual_ddm(PdualDdmParams& p) {
  detail::validate_common(p.outer);
  detail::require(p.outer.lipschitz_L >= 2.0, "primal-dual DDM needs L >= 2");
  detail::require(p.outer.tau > 0.0 && p.outer.sigma > 0.0,
                  "primal-dual DDM needs tau > 0 and sigma > 0");
  const double target = 1.0 / p.outer.lipschitz_L;
  detail::require(std::abs(p.outer.tau * p.outer.sigma - target) <= 1e-12 * target,
                  "primal-dual DDM needs tau * sigma = 1 / L");
  detail::require(p.outer.pnorm == PNorm::one && p.inner.pnorm == PNorm::one,
                  "decomposition solvers support pnorm 1 only");
  detail::require(p.inner.alpha == p.outer.alpha, "inner and outer alpha differ");
  p.inner.tau = p.outer.tau;
  return linear_pd_steps(p.inner);
}

/// Local prox solves with warm-started per-subdomain state (p~_s, u_s).
class PdualDdm {
 public:
  PdualDdm(const Image& f, const Decomposition& d, PdualDdmParams prm)
      : f_(f), d_(d), prm_(std::move(prm)) {
    steps_ = validate_pdual_ddm(prm_);
    if (f.dims != d.dims) throw DimensionError("primal-dual DDM: image and decomposition differ");
    workers_ = resolve_workers(prm_.workers);
    const std::size_t ns = d.subdomain_count();
    tilde_ = d.zero_tilde();
    local_u_.resize(ns);
    f_local_.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      f_local_[s] = d.extract(f.values, s);
      local_u_[s].assign(f_local_[s].size(), 0.0);
    }
    inner_iters_.assign(ns, 0);
    local_seconds_.assign(ns, 0.0);
  }

  /// Solves the local problem of subdomain s for center p_hat_s, starting from
  /// the current local state. Returns the inner iteration count.
  std::size_t local_prox_solve(std::size_t s, std::span<const double> p_hat_s) {
    const KernelResult kr = linear_pd_kernel(d_.tilde_layouts[s], f_local_[s], p_hat_s,
                                             tilde_.parts[s], local_u_[s], prm_.inner, steps_);
    return kr.iterations;
  }

  /// All local solves for centers p^ = p~ - tau B* lambda; returns the largest
  /// inner iteration count.
  std::size_t prox_all(const TildeField& bstar_lambda) {
    const double tau = prm_.outer.tau;
    Stopwatch region;
    parallel_for(d_.subdomain_count(), workers_, [&](std::size_t s) {
      Stopwatch sw;
      std::vector<double> p_hat = tilde_.parts[s];
      const auto& bl = bstar_lambda.parts[s];
      for (std::size_t k = 0; k < p_hat.size(); ++k) p_hat[k] -= tau * bl[k];
      inner_iters_[s] = local_prox_solve(s, p_hat);
      local_seconds_[s] = sw.seconds();
    });
    last_region_seconds_ = region.seconds();
    return *std::max_element(inner_iters_.begin(), inner_iters_.end());
  }

  [[nodiscard]] const TildeField& tilde() const { return tilde_; }
  [[nodiscard]] double max_local_seconds() const {
    return *std::max_element(local_seconds_.begin(), local_seconds_.end());
  }
  [[nodiscard]] double last_region_seconds() const { return last_region_seconds_; }
  [[nodiscard]] const PdualDdmParams& params() const { return prm_; }
  [[nodiscard]] const LinearPdSteps& steps() const { return steps_; }

 private:
  const Image& f_;
  const Decomposition& d_;
  PdualDdmParams prm_;
  LinearPdSteps steps_;
  std::size_t workers_ = 1;
  TildeField tilde_;
  std::vector<std::vector<double>> local_u_;
  std::vector<std::vector<double>> f_local_;
  std::vector<std::size_t> inner_iters_;
  std::vector<double> local_seconds_;
  double last_region_seconds_ = 0.0;
};

/// Cold-start local prox solve on subdomain s.
inline std::vector<double> local_prox_solve(std::size_t s, std::span<const double> p_hat_s,
                                            const Image& f, const Decomposition& d,
                                            const PdualDdmParams& prm) {
  PdualDdm solver(f, d, prm);
  solver.local_prox_solve(s, p_hat_s);
  return solver.tilde().parts[s];
}

/// Global field whose interior dofs come from their owner and whose interface
/// dofs are the mean of the two duplicated values.
inline DualField average_tilde(const TildeField& pt, const Decomposition& d) {
  check_tilde_shape(pt, d);
  DualField p(d.dims);
  for (std::size_t s = 0; s < d.subdomain_count(); ++s) {
    const auto& map = d.tilde_maps[s];
    for (std::size_t k = 0; k < map.size(); ++k) p.values[map[k]] = pt.parts[s][k];
  }
  for (const InterfaceLink& l : d.interface_pairs) {
    p.values[l.global] = 0.5 * (pt.parts[l.s][l.slot_s] + pt.parts[l.t][l.slot_t]);
  }
  return p;
}

/// Runs the multiplier iteration until the relative primal-energy change falls
/// below params.outer.rel_tol. Primal iterate: u = f + (1/alpha) (+)_s div p~_s.
/// The final duplicated field p~ is copied to *tilde_out when given.
inline SolveReport pdual_ddm_solve(const Image& f, const Decomposition& d,
                                   const PdualDdmParams& prm, TildeField* tilde_out = nullptr) {
  PdualDdm solver(f, d, prm);
  const double alpha = prm.outer.alpha;
  const double sigma = solver.params().outer.sigma;
  const std::size_t ng = d.interface_size();
  InterfaceVector lambda(ng);
  TildeField prev = d.zero_tilde();

  Stopwatch clock;
  double virtual_seconds = 0.0;
  SolveReport rep;

  struct Snapshot {
    Image primal;
    double J = 0.0;
    double E = 0.0;
    double jump = 0.0;
  };
  auto evaluate = [&]() {
    Snapshot sn;
    const Image dv = tilde_div(solver.tilde(), d);
    sn.primal = Image(d.dims);
    for (std::size_t k = 0; k < dv.values.size(); ++k) {
      sn.primal.values[k] = f.values[k] + dv.values[k] / alpha;
    }
    sn.J = tilde_energy(solver.tilde(), f, alpha, d);
    sn.E = energy_primal(sn.primal, f, alpha, PNorm::one);
    sn.jump = vec::norm2(jump_B(solver.tilde(), d).values);
    return sn;
  };
  auto record = [&](std::size_t n, const Snapshot& sn, std::size_t inner, bool force) {
    if (!force && n % prm.outer.trace_stride != 0) return;
    if (!rep.trace.empty() && rep.trace.back().iteration == n) return;
    TraceRecord r;
    r.iteration = n;
    r.dual_energy = sn.J;
    r.primal_energy = sn.E;
    r.jump_norm = sn.jump;
    r.max_inner_iters = inner;
    r.wall_clock_seconds = clock.seconds();
    r.virtual_wall_clock_seconds = virtual_seconds;
    rep.trace.push_back(r);
  };

  Snapshot cur = evaluate();
  record(0, cur, 0, true);

  std::size_t n = 0;
  std::size_t inner = 0;
  bool converged = false;
  Stopwatch iter_clock;
  while (n < prm.outer.max_iter) {
    iter_clock.reset();
    // lambda <- lambda + sigma B(2 p~^(n) - p~^(n-1)), with p~^(-1) = p~^(0).
    TildeField ext = solver.tilde();
    for (std::size_t s = 0; s < ext.parts.size(); ++s) {
      for (std::size_t k = 0; k < ext.parts[s].size(); ++k) {
        ext.parts[s][k] = 2.0 * ext.parts[s][k] - prev.parts[s][k];
      }
    }
    const InterfaceVector jump = jump_B(ext, d);
    for (std::size_t g = 0; g < ng; ++g) lambda.values[g] += sigma * jump.values[g];
    prev = solver.tilde();
    inner = solver.prox_all(jump_B_adj(lambda, d));
    ++n;

    Snapshot next = evaluate();
    if (!std::isfinite(next.E)) throw SolverError("primal-dual DDM: energy became non-finite");
    virtual_seconds +=
        solver.max_local_seconds() + (iter_clock.seconds() - solver.last_region_seconds());
    rep.max_inner_iters = std::max(rep.max_inner_iters, inner);
    const double change = std::abs(next.E - cur.E);
    cur = std::move(next);
    record(n, cur, inner, false);
    if (change == 0.0 || change < prm.outer.rel_tol * std::abs(cur.E)) {
      converged = true;
      break;
    }
  }
  record(n, cur, inner, true);
  rep.iterations = n;
  rep.dual = average_tilde(solver.tilde(), d);
  if (tilde_out != nullptr) *tilde_out = solver.tilde();
  rep.primal = std::move(cur.primal);
  rep.stop_reason = converged ? StopReason::tolerance : StopReason::max_iter;
  rep.wall_clock_seconds = clock.seconds();
  rep.virtual_wall_clock_seconds = virtual_seconds;
  return rep;
}

}  // namespace rofdd
