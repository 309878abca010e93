#pragma once

// Energies of the dual ROF model and the three full-domain solvers:
//
//   * fista_dual_full  - accelerated projected gradient on the dual energy
//                        J(p) = 1/(2 alpha) ||div p + alpha f||^2 over C;
//   * accel_pd_full    - O(1/n^2) primal-dual iteration on the saddle problem
//                        min_{p in C} max_u <div p, u> - alpha/2 ||u - f||^2;
//   * linear_pd_full   - linearly convergent primal-dual iteration for the
//                        proximally regularized problem
//                        J(p) + chi_C(p) + 1/(2 tau) ||p - p_hat||^2.
//
// The primal-dual kernels are written against an EdgeLayout so the domain
// decomposition drivers reuse them on subdomain patches.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rofdd/constraints.hpp"
#include "rofdd/errors.hpp"
#include "rofdd/mesh.hpp"
#include "rofdd/report.hpp"
#include "rofdd/vector_ops.hpp"

namespace rofdd {

/// Parameters shared by the iterative solvers. Not every field is read by every
/// solver; each solver validates the subset it uses.
struct SolverParams {
  double alpha = 10.0;        // fidelity weight
  double lipschitz_L = 8.0;   // step bound
  double tau = 0.0;           // proximal weight (linear PD) / outer primal step (pdual DDM)
  double sigma = 0.0;         // outer multiplier step (pdual DDM)
  double tau0 = 0.01;         // initial primal (image) step of the accelerated PD
  double sigma0 = 12.5;       // initial dual-field step of the accelerated PD
  double gamma = 1.25;        // strong convexity modulus used for acceleration
  double delta = 0.0;         // linear PD: strong convexity of the prox term; 0 selects 1/tau
  double theta0 = 0.0;        // linear PD extrapolation; 0 selects 1/(1 + mu)
  std::size_t max_iter = 100000;
  double rel_tol = 1e-5;
  PNorm pnorm = PNorm::one;
  std::size_t trace_stride = 1;
};

inline SolverParams fista_defaults(double alpha) {
  SolverParams p;
  p.alpha = alpha;
  p.lipschitz_L = 8.0;
  return p;
}

/// Accelerated primal-dual defaults: L = 8, gamma = alpha / 8, tau0 = 0.01,
/// sigma0 tau0 = 1 / L.
inline SolverParams accel_pd_defaults(double alpha) {
  SolverParams p;
  p.alpha = alpha;
  p.lipschitz_L = 8.0;
  p.gamma = 0.125 * alpha;
  p.tau0 = 0.01;
  p.sigma0 = 1.0 / (p.lipschitz_L * p.tau0);
  return p;
}

/// Linearly convergent primal-dual defaults: L = 8, gamma = alpha / 2, delta = 1 / tau.
inline SolverParams linear_pd_defaults(double alpha, double tau) {
  SolverParams p;
  p.alpha = alpha;
  p.lipschitz_L = 8.0;
  p.gamma = 0.5 * alpha;
  p.tau = tau;
  p.delta = 1.0 / tau;
  return p;
}

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

inline void validate_common(const SolverParams& p) {
  require(std::isfinite(p.alpha) && p.alpha > 0.0, "alpha must be positive");
  require(p.max_iter >= 1, "max_iter must be at least 1");
  require(std::isfinite(p.rel_tol) && p.rel_tol >= 0.0, "rel_tol must be nonnegative");
  require(p.trace_stride >= 1, "trace_stride must be at least 1");
}

inline void require_match(const Image& f, GridDims dims, const char* what) {
  if (f.dims != dims) throw DimensionError(std::string(what) + ": grid mismatch");
}

}  // namespace detail

inline void validate_fista(const SolverParams& p) {
  detail::validate_common(p);
  detail::require(p.lipschitz_L >= 8.0, "FISTA on the full domain needs L >= 8");
}

inline void validate_accel_pd(const SolverParams& p) {
  detail::validate_common(p);
  detail::require(p.lipschitz_L >= 8.0, "accelerated primal-dual needs L >= 8");
  detail::require(p.tau0 > 0.0 && p.sigma0 > 0.0, "tau0 and sigma0 must be positive");
  const double target = 1.0 / p.lipschitz_L;
  detail::require(std::abs(p.sigma0 * p.tau0 - target) <= 1e-12 * target,
                  "accelerated primal-dual needs sigma0 * tau0 = 1 / L");
  detail::require(p.gamma >= 0.0 && p.gamma <= p.alpha, "gamma must lie in [0, alpha]");
}

/// Step sizes of the linearly convergent primal-dual iteration.
struct LinearPdSteps {
  double mu = 0.0;
  double delta = 0.0;
  double tau0 = 0.0;    // image step
  double sigma0 = 0.0;  // dual-field step
  double theta0 = 0.0;
};

inline LinearPdSteps linear_pd_steps(const SolverParams& p) {
  detail::validate_common(p);
  detail::require(std::isfinite(p.tau) && p.tau > 0.0, "linear primal-dual needs tau > 0");
  detail::require(p.lipschitz_L >= 8.0, "linear primal-dual needs L >= 8");
  detail::require(p.gamma > 0.0 && p.gamma <= p.alpha, "linear primal-dual needs 0 < gamma <= alpha");
  const double delta = p.delta > 0.0 ? p.delta : 1.0 / p.tau;
  detail::require(delta <= (1.0 / p.tau) * (1.0 + 1e-12),
                  "linear primal-dual needs 0 < delta <= 1 / tau");
  LinearPdSteps s;
  s.delta = delta;
  s.mu = 2.0 * std::sqrt(p.gamma * delta) / p.lipschitz_L;
  s.tau0 = s.mu / (2.0 * p.gamma);
  s.sigma0 = s.mu / (2.0 * delta);
  const double lower = 1.0 / (1.0 + s.mu);
  s.theta0 = p.theta0 > 0.0 ? p.theta0 : lower;
  detail::require(s.theta0 >= lower * (1.0 - 1e-12) && s.theta0 <= 1.0,
                  "linear primal-dual needs theta0 in [1 / (1 + mu), 1]");
  return s;
}

namespace stencil {

/// 1/(2 alpha) * sum over pixels of (div p + alpha f)^2 on a patch.
inline double dual_energy(const EdgeLayout& lay, std::span<const double> p,
                          std::span<const double> f, double alpha) {
  std::vector<double> d(lay.dims.pixel_count());
  div(lay, p, d);
  double s = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double r = d[k] + alpha * f[k];
    s += r * r;
  }
  return s / (2.0 * alpha);
}

}  // namespace stencil

inline double energy_dual(const DualField& p, const Image& f, double alpha) {
  detail::require_match(f, p.dims, "energy_dual");
  detail::require(alpha > 0.0, "alpha must be positive");
  return stencil::dual_energy(closed_layout(p.dims), p.values, f.values, alpha);
}

/// alpha/2 ||u - f||^2 + sum_T |(Du)_T|_p with forward differences that vanish
/// at the far boundary.
inline double energy_primal(const Image& u, const Image& f, double alpha, PNorm pn) {
  if (u.dims != f.dims) throw DimensionError("energy_primal: grid mismatch");
  const std::size_t m = u.dims.rows;
  const std::size_t n = u.dims.cols;
  double fidelity = 0.0;
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    const double r = u.values[k] - f.values[k];
    fidelity += r * r;
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d1 = i + 1 < m ? u.at(i + 1, j) - u.at(i, j) : 0.0;
      const double d2 = j + 1 < n ? u.at(i, j + 1) - u.at(i, j) : 0.0;
      tv += pn == PNorm::one ? std::abs(d1) + std::abs(d2) : std::hypot(d1, d2);
    }
  }
  return 0.5 * alpha * fidelity + tv;
}

/// (1/alpha) div*(div p + alpha f).
inline DualField grad_J(const DualField& p, const Image& f, double alpha) {
  detail::require_match(f, p.dims, "grad_J");
  detail::require(alpha > 0.0, "alpha must be positive");
  Image r = div(p);
  for (std::size_t k = 0; k < r.values.size(); ++k) r.values[k] += alpha * f.values[k];
  DualField g = div_adj(r);
  for (double& v : g.values) v /= alpha;
  return g;
}

/// u = f + (1/alpha) div p.
inline Image recover_primal(const DualField& p, const Image& f, double alpha) {
  detail::require_match(f, p.dims, "recover_primal");
  detail::require(alpha > 0.0, "alpha must be positive");
  Image u = div(p);
  for (std::size_t k = 0; k < u.values.size(); ++k) {
    u.values[k] = f.values[k] + u.values[k] / alpha;
  }
  return u;
}

/// Outcome of a kernel run on one patch.
struct KernelResult {
  std::size_t iterations = 0;
  bool converged = false;
};

struct NoObserver {
  void operator()(std::size_t, std::span<const double>) const {}
};

namespace detail {

inline void check_finite_step(double step_norm, const char* who) {
  if (!std::isfinite(step_norm)) {
    throw SolverError(std::string(who) + ": iterate became non-finite");
  }
}

inline bool converged_step(double step_norm, std::span<const double> p, double tol) {
  if (step_norm == 0.0) return true;
  return step_norm < tol * vec::norm2(p);
}

inline double step_and_save(std::span<const double> next, std::vector<double>& prev) {
  double s = 0.0;
  for (std::size_t k = 0; k < next.size(); ++k) {
    const double d = next[k] - prev[k];
    s += d * d;
    prev[k] = next[k];
  }
  return std::sqrt(s);
}

}  // namespace detail

/// Accelerated primal-dual iteration on a patch, warm-started from (p, u).
/// Runs until the relative changes of p and of u both drop below params.rel_tol or
/// params.max_iter iterations. The observer sees (iteration, p) after every step.
template <class Observer = NoObserver>
KernelResult accel_pd_kernel(const EdgeLayout& lay, std::span<const double> f,
                             std::vector<double>& p, std::vector<double>& u,
                             const SolverParams& prm, Observer&& observe = {}) {
  const std::size_t np = lay.dims.pixel_count();
  const std::size_t ne = lay.size();
  vec::require_same_size(f.size(), np, "accel_pd_kernel f");
  vec::require_same_size(p.size(), ne, "accel_pd_kernel p");
  vec::require_same_size(u.size(), np, "accel_pd_kernel u");

  std::vector<double> ubar = u;
  std::vector<double> grad(ne);
  std::vector<double> divp(np);
  std::vector<double> p_prev = p;
  double tau = prm.tau0;
  double sigma = prm.sigma0;
  const double alpha = prm.alpha;

  KernelResult res;
  for (std::size_t n = 0; n < prm.max_iter; ++n) {
    stencil::div_adj(lay, ubar, grad);
    for (std::size_t k = 0; k < ne; ++k) p[k] -= sigma * grad[k];
    stencil::project(lay, prm.pnorm, p);
    stencil::div(lay, p, divp);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * prm.gamma * tau);
    const double denom = 1.0 + tau * alpha;
    double ustep2 = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
      const double u_old = u[k];
      const double u_new = (u_old + tau * divp[k] + tau * alpha * f[k]) / denom;
      u[k] = u_new;
      ubar[k] = u_new + theta * (u_new - u_old);
      ustep2 += (u_new - u_old) * (u_new - u_old);
    }
    tau *= theta;
    sigma /= theta;

    const double step = detail::step_and_save(p, p_prev);
    const double ustep = std::sqrt(ustep2);
    detail::check_finite_step(step + ustep, "accelerated primal-dual");
    res.iterations = n + 1;
    observe(res.iterations, std::span<const double>(p));
    if (detail::converged_step(step, p, prm.rel_tol) &&
        detail::converged_step(ustep, u, prm.rel_tol)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Linearly convergent primal-dual iteration for
///   min_p J(p) + chi_C(p) + 1/(2 tau) ||p - p_hat||^2
/// on a patch, warm-started from (p, u).
template <class Observer = NoObserver>
KernelResult linear_pd_kernel(const EdgeLayout& lay, std::span<const double> f,
                              std::span<const double> p_hat, std::vector<double>& p,
                              std::vector<double>& u, const SolverParams& prm,
                              const LinearPdSteps& steps, Observer&& observe = {}) {
  const std::size_t np = lay.dims.pixel_count();
  const std::size_t ne = lay.size();
  vec::require_same_size(f.size(), np, "linear_pd_kernel f");
  vec::require_same_size(p_hat.size(), ne, "linear_pd_kernel p_hat");
  vec::require_same_size(p.size(), ne, "linear_pd_kernel p");
  vec::require_same_size(u.size(), np, "linear_pd_kernel u");

  std::vector<double> ubar = u;
  std::vector<double> grad(ne);
  std::vector<double> divp(np);
  std::vector<double> p_prev = p;
  const double tau = prm.tau;
  const double s0 = steps.sigma0;
  const double t0 = steps.tau0;
  const double th = steps.theta0;
  const double alpha = prm.alpha;
  const double inv = 1.0 / (tau + s0);
  const double denom = 1.0 + t0 * alpha;

  KernelResult res;
  for (std::size_t n = 0; n < prm.max_iter; ++n) {
    stencil::div_adj(lay, ubar, grad);
    for (std::size_t k = 0; k < ne; ++k) {
      p[k] = (tau * (p[k] - s0 * grad[k]) + s0 * p_hat[k]) * inv;
    }
    stencil::project(lay, prm.pnorm, p);
    stencil::div(lay, p, divp);
    double ustep2 = 0.0;
    for (std::size_t k = 0; k < np; ++k) {
      const double u_old = u[k];
      const double u_new = (u_old + t0 * divp[k] + t0 * alpha * f[k]) / denom;
      u[k] = u_new;
      ubar[k] = u_new + th * (u_new - u_old);
      ustep2 += (u_new - u_old) * (u_new - u_old);
    }

    const double step = detail::step_and_save(p, p_prev);
    const double ustep = std::sqrt(ustep2);
    detail::check_finite_step(step + ustep, "linear primal-dual");
    res.iterations = n + 1;
    observe(res.iterations, std::span<const double>(p));
    if (detail::converged_step(step, p, prm.rel_tol) &&
        detail::converged_step(ustep, u, prm.rel_tol)) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace detail {

/// Trace bookkeeping for the full-domain drivers.
class FullTraceRecorder {
 public:
  FullTraceRecorder(const Image& f, const SolverParams& prm) : f_(f), prm_(prm) {}

  void record(std::size_t iteration, std::span<const double> p_values, bool force = false) {
    if (!force && iteration % prm_.trace_stride != 0) return;
    if (!trace.empty() && trace.back().iteration == iteration) return;
    DualField p(f_.dims, std::vector<double>(p_values.begin(), p_values.end()));
    TraceRecord rec;
    rec.iteration = iteration;
    rec.dual_energy = energy_dual(p, f_, prm_.alpha);
    rec.primal_energy = energy_primal(recover_primal(p, f_, prm_.alpha), f_, prm_.alpha, prm_.pnorm);
    rec.wall_clock_seconds = clock_.seconds();
    rec.virtual_wall_clock_seconds = rec.wall_clock_seconds;
    trace.push_back(rec);
  }

  SolveReport finish(std::vector<double> p_values, std::size_t iterations, bool converged) {
    record(iterations, p_values, true);
    SolveReport rep;
    rep.iterations = iterations;
    rep.dual = DualField(f_.dims, std::move(p_values));
    rep.primal = recover_primal(rep.dual, f_, prm_.alpha);
    rep.trace = std::move(trace);
    rep.stop_reason = converged ? StopReason::tolerance : StopReason::max_iter;
    rep.wall_clock_seconds = clock_.seconds();
    rep.virtual_wall_clock_seconds = rep.wall_clock_seconds;
    return rep;
  }

  std::vector<TraceRecord> trace;

 private:
  const Image& f_;
  const SolverParams& prm_;
  Stopwatch clock_;
};

}  // namespace detail

/// FISTA on the dual energy with the alpha-cancelled step
/// p <- proj_C(q - (1/L) div*(div q + alpha f)), starting from p = 0.
inline SolveReport fista_dual_full(const Image& f, const SolverParams& prm) {
  validate_fista(prm);
  f.dims.validate();
  const EdgeLayout lay = closed_layout(f.dims);
  const std::size_t np = f.dims.pixel_count();
  const std::size_t ne = lay.size();
  std::vector<double> p(ne, 0.0);
  std::vector<double> q(ne, 0.0);
  std::vector<double> p_next(ne);
  std::vector<double> r(np);
  std::vector<double> g(ne);
  double t = 1.0;
  const double inv_l = 1.0 / prm.lipschitz_L;

  detail::FullTraceRecorder rec(f, prm);
  rec.record(0, p);
  std::size_t it = 0;
  bool converged = false;
  for (std::size_t n = 0; n < prm.max_iter; ++n) {
    stencil::div(lay, q, r);
    for (std::size_t k = 0; k < np; ++k) r[k] += prm.alpha * f.values[k];
    stencil::div_adj(lay, r, g);
    for (std::size_t k = 0; k < ne; ++k) p_next[k] = q[k] - inv_l * g[k];
    stencil::project(lay, prm.pnorm, p_next);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double w = (t - 1.0) / t_next;
    double step2 = 0.0;
    for (std::size_t k = 0; k < ne; ++k) {
      const double d = p_next[k] - p[k];
      step2 += d * d;
      q[k] = p_next[k] + w * d;
      p[k] = p_next[k];
    }
    t = t_next;
    const double step = std::sqrt(step2);
    detail::check_finite_step(step, "FISTA");
    it = n + 1;
    rec.record(it, p);
    if (detail::converged_step(step, p, prm.rel_tol)) {
      converged = true;
      break;
    }
  }
  return rec.finish(std::move(p), it, converged);
}

/// Accelerated primal-dual on the full domain from p = 0, u = 0.
inline SolveReport accel_pd_full(const Image& f, const SolverParams& prm) {
  validate_accel_pd(prm);
  f.dims.validate();
  const EdgeLayout lay = closed_layout(f.dims);
  std::vector<double> p(lay.size(), 0.0);
  std::vector<double> u(f.dims.pixel_count(), 0.0);
  detail::FullTraceRecorder rec(f, prm);
  rec.record(0, p);
  const KernelResult kr = accel_pd_kernel(lay, f.values, p, u, prm,
                                          [&](std::size_t n, std::span<const double> pv) {
                                            rec.record(n, pv);
                                          });
  return rec.finish(std::move(p), kr.iterations, kr.converged);
}

/// Linearly convergent primal-dual on the full domain for the proximally
/// regularized problem with center p_hat and weight 1/(2 tau), from p = 0, u = 0.
inline SolveReport linear_pd_full(const Image& f, const DualField& p_hat, const SolverParams& prm) {
  const LinearPdSteps steps = linear_pd_steps(prm);
  if (p_hat.dims != f.dims) throw DimensionError("linear_pd_full: p_hat grid mismatch");
  const EdgeLayout lay = closed_layout(f.dims);
  std::vector<double> p(lay.size(), 0.0);
  std::vector<double> u(f.dims.pixel_count(), 0.0);
  detail::FullTraceRecorder rec(f, prm);
  rec.record(0, p);
  const KernelResult kr = linear_pd_kernel(lay, f.values, p_hat.values, p, u, prm, steps,
                                           [&](std::size_t n, std::span<const double> pv) {
                                             rec.record(n, pv);
                                           });
  return rec.finish(std::move(p), kr.iterations, kr.converged);
}

inline SolveReport linear_pd_full(const Image& f, const SolverParams& prm) {
  return linear_pd_full(f, DualField(f.dims), prm);
}

/// Approximate minimum of the primal energy: a fixed-length accelerated
/// primal-dual run (params.max_iter iterations, 10000 by default in
/// reference_params) with no early stop except an exactly stationary iterate.
inline SolverParams reference_params(double alpha, PNorm pn = PNorm::one) {
  SolverParams p = accel_pd_defaults(alpha);
  p.max_iter = 10000;
  p.rel_tol = 0.0;
  p.pnorm = pn;
  return p;
}

inline double reference_minimum(const Image& f, const SolverParams& prm) {
  validate_accel_pd(prm);
  const EdgeLayout lay = closed_layout(f.dims);
  std::vector<double> p(lay.size(), 0.0);
  std::vector<double> u(f.dims.pixel_count(), 0.0);
  accel_pd_kernel(lay, f.values, p, u, prm);
  const DualField pf(f.dims, std::move(p));
  return energy_primal(recover_primal(pf, f, prm.alpha), f, prm.alpha, prm.pnorm);
}

}  // namespace rofdd
