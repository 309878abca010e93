#pragma once

// Primal domain decomposition: FISTA on the interface dofs after eliminating
// the interior dofs by independent local ROF solves.
//
// For frozen interface values q_Gamma the interior part H_I q_Gamma minimizes
// J(. (+) q_Gamma) over C_I; it splits into one problem per subdomain in which
// q_Gamma enters only as a fixed boundary flux. The reduced functional
// J_Gamma(q) = J(H_I q (+) q) has gradient (1/alpha) div*(div(H_I q (+) q) + alpha f)
// restricted to the interface, Lipschitz with constant 4/alpha.

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

struct PrimalDdmParams {
  SolverParams outer;  // alpha, L (>= 4), outer rel_tol, max outer iterations, trace stride
  SolverParams inner;  // accelerated primal-dual parameters of the local solves
  std::size_t workers = 1;
};

/// L = 4, outer tol 1e-3; local solves with L = 8, gamma = alpha/8,
/// tau0 = 0.01, sigma0 tau0 = 1/L and inner tol 1e-5.
inline PrimalDdmParams primal_ddm_defaults(double alpha) {
  PrimalDdmParams p;
  p.outer.alpha = alpha;
  p.outer.lipschitz_L = 4.0;
  p.outer.rel_tol = 1e-3;
  p.outer.max_iter = 1000;
  p.inner = accel_pd_defaults(alpha);
  p.inner.rel_tol = 1e-5;
  p.inner.max_iter = 100000;
  return p;
}

inline void validate_primal_ddm(const PrimalDdmParams& p) {
  detail::validate_common(p.outer);
  detail::require(p.outer.lipschitz_L >= 4.0, "primal DDM needs L >= 4");
  detail::require(p.outer.pnorm == PNorm::one && p.inner.pnorm == PNorm::one,
                  "decomposition solvers support pnorm 1 only");
  validate_accel_pd(p.inner);
  detail::require(p.inner.alpha == p.outer.alpha, "inner and outer alpha differ");
}

/// Interior elimination and interface FISTA state for one image and decomposition.
/// Local solves are warm-started from the previous call's local solutions.
class PrimalDdm {
 public:
  PrimalDdm(const Image& f, const Decomposition& d, PrimalDdmParams prm)
      : f_(f), d_(d), prm_(std::move(prm)) {
    validate_primal_ddm(prm_);
    if (f.dims != d.dims) throw DimensionError("primal DDM: image and decomposition differ");
    workers_ = resolve_workers(prm_.workers);
    const std::size_t ns = d.subdomain_count();
    local_p_.resize(ns);
    local_u_.resize(ns);
    f_local_.resize(ns);
    for (std::size_t s = 0; s < ns; ++s) {
      local_p_[s].assign(d.interior_dofs[s].size(), 0.0);
      f_local_[s] = d.extract(f.values, s);
      local_u_[s].assign(f_local_[s].size(), 0.0);
    }
    inner_iters_.assign(ns, 0);
    local_seconds_.assign(ns, 0.0);
  }

  /// Local problem of subdomain s for frozen interface values (warm start).
  /// Returns the number of inner iterations.
  std::size_t local_eliminate(std::size_t s, const InterfaceVector& q) {
    const Image flux = div(assemble_interface(q, d_));
    return solve_local(s, d_.extract(flux.values, s));
  }

  /// H_I q for all subdomains; returns the largest inner iteration count.
  std::size_t harmonic_extend(const InterfaceVector& q) {
    vec::require_same_size(q.size(), d_.interface_size(), "harmonic_extend");
    const Image flux = div(assemble_interface(q, d_));
    Stopwatch region;
    parallel_for(d_.subdomain_count(), workers_, [&](std::size_t s) {
      Stopwatch sw;
      inner_iters_[s] = solve_local(s, d_.extract(flux.values, s));
      local_seconds_[s] = sw.seconds();
    });
    last_region_seconds_ = region.seconds();
    return *std::max_element(inner_iters_.begin(), inner_iters_.end());
  }

  /// Current interior parts (the last computed H_I q).
  [[nodiscard]] const std::vector<std::vector<double>>& interior() const { return local_p_; }

  [[nodiscard]] DualField assembled(const InterfaceVector& q) const {
    return assemble(local_p_, q, d_);
  }

  /// J_Gamma(q) = J(H_I q (+) q), re-solving the local problems.
  double interface_energy(const InterfaceVector& q) {
    harmonic_extend(q);
    return energy_dual(assembled(q), f_, prm_.outer.alpha);
  }

  [[nodiscard]] double max_local_seconds() const {
    return *std::max_element(local_seconds_.begin(), local_seconds_.end());
  }
  [[nodiscard]] double last_region_seconds() const { return last_region_seconds_; }
  [[nodiscard]] const PrimalDdmParams& params() const { return prm_; }

 private:
  std::size_t solve_local(std::size_t s, const std::vector<double>& flux_local) {
    // The frozen interface flux shifts the datum: div(p_s + q|s) + alpha f
    // = div p_s + alpha (f + flux / alpha).
    std::vector<double> f_eff = f_local_[s];
    const double alpha = prm_.outer.alpha;
    for (std::size_t k = 0; k < f_eff.size(); ++k) f_eff[k] += flux_local[k] / alpha;
    const KernelResult kr =
        accel_pd_kernel(d_.interior_layout(s), f_eff, local_p_[s], local_u_[s], prm_.inner);
    return kr.iterations;
  }

  const Image& f_;
  const Decomposition& d_;
  PrimalDdmParams prm_;
  std::size_t workers_ = 1;
  std::vector<std::vector<double>> local_p_;
  std::vector<std::vector<double>> local_u_;
  std::vector<std::vector<double>> f_local_;
  std::vector<std::size_t> inner_iters_;
  std::vector<double> local_seconds_;
  double last_region_seconds_ = 0.0;
};

/// Cold-start local elimination on subdomain s.
inline std::vector<double> local_eliminate(std::size_t s, const InterfaceVector& q, const Image& f,
                                           const Decomposition& d, const PrimalDdmParams& prm) {
  PrimalDdm solver(f, d, prm);
  solver.local_eliminate(s, q);
  return solver.interior()[s];
}

/// Cold-start H_I q over all subdomains.
inline std::vector<std::vector<double>> harmonic_extend(const InterfaceVector& q, const Image& f,
                                                        const Decomposition& d,
                                                        const PrimalDdmParams& prm) {
  PrimalDdm solver(f, d, prm);
  solver.harmonic_extend(q);
  return solver.interior();
}

/// (1/alpha) div*(div(p_I (+) q) + alpha f) restricted to the interface dofs.
inline InterfaceVector grad_J_Gamma(const InterfaceVector& q,
                                    std::span<const std::vector<double>> p_interior,
                                    const Image& f, const Decomposition& d, double alpha) {
  const DualField p = assemble(p_interior, q, d);
  const DualField g = grad_J(p, f, alpha);
  InterfaceVector out(d.interface_size());
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] = g.values[d.interface_dofs[k]];
  return out;
}

/// FISTA state on the interface: main iterate p, extrapolated point q, momentum t.
struct InterfaceFista {
  InterfaceVector q;
  InterfaceVector p;
  double t = 1.0;

  explicit InterfaceFista(std::size_t n) : q(n), p(n) {}

  /// One projected gradient + momentum step given H_I q (+) q.
  void step(const DualField& assembled, const Image& f, const Decomposition& d, double alpha,
            double lipschitz_L) {
    Image r = div(assembled);
    for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] += alpha * f.values[k];
    const DualField g = div_adj(r);
    const std::size_t ng = q.size();
    InterfaceVector p_next(ng);
    for (std::size_t k = 0; k < ng; ++k) {
      const double v = q.values[k] - g.values[d.interface_dofs[k]] / lipschitz_L;
      p_next.values[k] = v / std::max(1.0, std::abs(v));
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double w = (t - 1.0) / t_next;
    for (std::size_t k = 0; k < ng; ++k) {
      q.values[k] = p_next.values[k] + w * (p_next.values[k] - p.values[k]);
    }
    p = std::move(p_next);
    t = t_next;
  }
};

/// Runs the interface FISTA until the relative primal-energy change falls below
/// params.outer.rel_tol. Primal iterate: u = f + (1/alpha) div(H_I q (+) q).
inline SolveReport primal_ddm_solve(const Image& f, const Decomposition& d,
                                    const PrimalDdmParams& prm) {
  PrimalDdm solver(f, d, prm);
  const double alpha = prm.outer.alpha;
  InterfaceFista fista(d.interface_size());

  Stopwatch clock;
  double virtual_seconds = 0.0;
  SolveReport rep;

  struct Snapshot {
    DualField dual;
    Image primal;
    double J = 0.0;
    double E = 0.0;
  };
  auto evaluate = [&](const InterfaceVector& qv) {
    Snapshot sn;
    sn.dual = solver.assembled(qv);
    sn.primal = recover_primal(sn.dual, f, alpha);
    sn.J = energy_dual(sn.dual, f, alpha);
    sn.E = energy_primal(sn.primal, f, alpha, PNorm::one);
    return sn;
  };
  auto record = [&](std::size_t n, const Snapshot& sn, std::size_t inner, bool force) {
    if (!force && n % prm.outer.trace_stride != 0) return;
    if (!rep.trace.empty() && rep.trace.back().iteration == n) return;
    TraceRecord r;
    r.iteration = n;
    r.dual_energy = sn.J;
    r.primal_energy = sn.E;
    r.max_inner_iters = inner;
    r.wall_clock_seconds = clock.seconds();
    r.virtual_wall_clock_seconds = virtual_seconds;
    rep.trace.push_back(r);
  };

  Stopwatch iter_clock;
  std::size_t inner = solver.harmonic_extend(fista.q);
  Snapshot cur = evaluate(fista.q);
  virtual_seconds += solver.max_local_seconds() + (iter_clock.seconds() - solver.last_region_seconds());
  rep.max_inner_iters = inner;
  record(0, cur, inner, true);

  std::size_t n = 0;
  bool converged = false;
  while (n < prm.outer.max_iter) {
    iter_clock.reset();
    fista.step(cur.dual, f, d, alpha, prm.outer.lipschitz_L);
    ++n;

    inner = solver.harmonic_extend(fista.q);
    Snapshot next = evaluate(fista.q);
    if (!std::isfinite(next.E)) throw SolverError("primal DDM: energy became non-finite");
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
  rep.dual = std::move(cur.dual);
  rep.primal = std::move(cur.primal);
  rep.stop_reason = converged ? StopReason::tolerance : StopReason::max_iter;
  rep.wall_clock_seconds = clock.seconds();
  rep.virtual_wall_clock_seconds = virtual_seconds;
  return rep;
}

/// Same iteration as primal_ddm_solve, returning the feasible interface
/// iterates p_Gamma^(0..n) (p_Gamma^(0) = 0).
inline std::vector<InterfaceVector> primal_ddm_interface_iterates(const Image& f,
                                                                  const Decomposition& d,
                                                                  const PrimalDdmParams& prm,
                                                                  std::size_t iterations) {
  PrimalDdm solver(f, d, prm);
  InterfaceFista fista(d.interface_size());
  std::vector<InterfaceVector> out{fista.p};
  out.reserve(iterations + 1);
  for (std::size_t n = 0; n < iterations; ++n) {
    solver.harmonic_extend(fista.q);
    fista.step(solver.assembled(fista.q), f, d, prm.outer.alpha, prm.outer.lipschitz_L);
    out.push_back(fista.p);
  }
  return out;
}

}  // namespace rofdd
