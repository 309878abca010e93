// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance            runs every criterion
//   acceptance 3 5        runs the listed ones
//
// The exit status is nonzero when any selected criterion fails.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ddm_oracles.hpp"
#include "oracles.hpp"
#include "rofdd/rofdd.hpp"

using namespace rofdd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string round2(double v) { return fmt("%.2f", v); }

Image noisy_scene(GridDims d, std::uint64_t seed) {
  return add_gaussian_noise(oracle::scene(d), 0.0, 0.05, seed);
}

PrimalDdmParams primal_params(double alpha, double outer_tol, double inner_tol) {
  PrimalDdmParams p = primal_ddm_defaults(alpha);
  p.outer.rel_tol = outer_tol;
  p.inner.rel_tol = inner_tol;
  return p;
}

PdualDdmParams pdual_params(double alpha, double outer_tol, double inner_tol) {
  PdualDdmParams p = pdual_ddm_defaults(alpha);
  p.outer.rel_tol = outer_tol;
  p.inner.rel_tol = inner_tol;
  return p;
}

std::vector<double> flatten(const TildeField& t) {
  std::vector<double> out;
  for (const auto& part : t.parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

TildeField unflatten(const std::vector<double>& x, const Decomposition& d) {
  TildeField t = d.zero_tilde();
  std::size_t k = 0;
  for (auto& part : t.parts)
    for (double& v : part) v = x[k++];
  return t;
}

// 1. adjointness, norm bounds of div, div on the interface and B.
Outcome operator_properties() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> side(1, 24);

  double worst_adj = 0.0;
  double worst_div = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    GridDims d{side(rng), side(rng)};
    if (d.pixel_count() < 2) d.cols = 2;
    const Image u = oracle::random_image(d, rng);
    const DualField p = oracle::random_field(d, rng);
    worst_adj = std::max(worst_adj, std::abs(dot_Y(div_adj(u), p) - dot_X(u, div(p))));
    worst_div = std::max(worst_div, vec::norm2_squared(div(p).values) / vec::norm2_squared(p.values));
  }
  const GridDims g16{16, 16};
  const double pw_div = oracle::power_iteration(
      [&](const std::vector<double>& x) { return div_adj(div(DualField(g16, x))).values; },
      edge_count(g16), 500, 7);
  o.check(worst_adj <= 1e-12, "adjointness");
  o.check(worst_div <= 8.0 && pw_div <= 8.0, "|div|^2 <= 8");
  o.note("adj " + fmt("%.1e", worst_adj) + ", div " + fmt("%.3f", worst_div) + "/pow " + fmt("%.3f", pw_div));

  // Interface-supported fields, every subdomain at least 2x2.
  const std::vector<std::pair<GridDims, SubdomainGrid>> layouts = {
      {{8, 8}, {4, 4}}, {{16, 16}, {4, 4}}, {{12, 18}, {3, 2}}, {{9, 7}, {2, 3}}};
  double worst_gamma = 0.0;
  double pw_gamma = 0.0;
  double worst_b = 0.0;
  double pw_b = 0.0;
  for (const auto& [dims, ns] : layouts) {
    const Decomposition d = build_decomposition(dims, ns);
    for (int trial = 0; trial < 50; ++trial) {
      const InterfaceVector q(oracle::random_vector(d.interface_size(), rng));
      worst_gamma = std::max(worst_gamma, vec::norm2_squared(div(assemble_interface(q, d)).values) /
                                              vec::norm2_squared(q.values));
      const auto x = flatten(d.zero_tilde());
      const TildeField t = unflatten(oracle::random_vector(x.size(), rng), d);
      worst_b = std::max(worst_b, vec::norm2_squared(jump_B(t, d).values) / vec::norm2_squared(flatten(t)));
    }
    pw_gamma = std::max(pw_gamma, oracle::power_iteration(
                                      [&](const std::vector<double>& x) {
                                        const DualField g = div_adj(div(assemble_interface(InterfaceVector(x), d)));
                                        std::vector<double> out(x.size());
                                        for (std::size_t k = 0; k < out.size(); ++k)
                                          out[k] = g.values[d.interface_dofs[k]];
                                        return out;
                                      },
                                      d.interface_size(), 500, 8));
    pw_b = std::max(pw_b, oracle::power_iteration(
                              [&](const std::vector<double>& x) {
                                return flatten(jump_B_adj(jump_B(unflatten(x, d), d), d));
                              },
                              flatten(d.zero_tilde()).size(), 500, 9));
  }
  o.check(worst_gamma <= 4.0 && pw_gamma <= 4.0 + 1e-12, "|div p_Gamma|^2 <= 4");
  o.check(worst_b <= 2.0 && pw_b <= 2.0 + 1e-12, "|B|^2 <= 2");
  o.note("gamma " + fmt("%.3f", worst_gamma) + "/pow " + fmt("%.12f", pw_gamma) + ", B " +
         fmt("%.3f", worst_b) + "/pow " + fmt("%.12f", pw_b));
  return o;
}

// 2. grad_J and grad_J_Gamma against central finite differences.
Outcome gradient_oracles() {
  Outcome o;
  std::mt19937_64 rng(202);
  const GridDims dims{8, 8};
  const double alpha = 10.0;
  const Image f = oracle::random_image(dims, rng);

  double err_j = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const DualField p = oracle::random_field(dims, rng);
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& x) { return energy_dual(DualField(dims, x), f, alpha); }, p.values, 1e-5);
    err_j = std::max(err_j, oracle::rel_error(grad_J(p, f, alpha).values, fd));
  }
  o.check(err_j < 1e-5, "grad_J");

  const Decomposition d = build_decomposition(dims, {2, 2});
  const PrimalDdmParams prm = primal_params(alpha, 1e-3, 1e-10);
  PrimalDdm eval(f, d, prm);
  double err_g = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const InterfaceVector q(oracle::random_vector(d.interface_size(), rng, -0.5, 0.5));
    const auto hq = harmonic_extend(q, f, d, prm);
    const InterfaceVector g = grad_J_Gamma(q, hq, f, d, alpha);
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& x) { return eval.interface_energy(InterfaceVector(x)); }, q.values, 1e-4);
    err_g = std::max(err_g, oracle::rel_error(g.values, fd));
  }
  o.check(err_g < 1e-4, "grad_J_Gamma");
  o.note("grad_J rel " + fmt("%.1e", err_j) + ", grad_J_Gamma rel " + fmt("%.1e", err_g));
  return o;
}

// 3. f = (0, 1), alpha = 2: u = (0.5, 0.5), E = 0.5.
Outcome two_pixel() {
  Outcome o;
  const GridDims dims{1, 2};
  const Image f(dims, std::vector<double>{0.0, 1.0});
  const double alpha = 2.0;

  // Oracle: J(p) = 1/(2 alpha) (p^2 + (2 - p)^2), minimized at p* = 1 on |p| <= 1.
  double best_p = 0.0;
  double best_j = INFINITY;
  for (int k = -100000; k <= 100000; ++k) {
    const double p = k * 1e-5;
    const double j = (p * p + (2.0 - p) * (2.0 - p)) / (2.0 * alpha);
    if (j < best_j) best_j = j, best_p = p;
  }
  o.check(best_p == 1.0, "grid search minimizer");
  const Image u_star = recover_primal(DualField(dims, std::vector<double>{best_p}), f, alpha);
  o.check(u_star.values == std::vector<double>{0.5, 0.5}, "oracle primal");

  struct Named {
    const char* name;
    std::function<SolveReport()> run;
  };
  SolverParams fista = fista_defaults(alpha);
  fista.rel_tol = 1e-12;
  SolverParams accel = accel_pd_defaults(alpha);
  accel.rel_tol = 1e-12;
  SolverParams linear = linear_pd_defaults(alpha, 1e7);
  linear.rel_tol = 1e-14;
  linear.max_iter = 1000000;
  const std::vector<Named> solvers = {
      {"fista", [&] { return fista_dual_full(f, fista); }},
      {"accel-pd", [&] { return accel_pd_full(f, accel); }},
      {"linear-pd", [&] { return linear_pd_full(f, linear); }},
  };
  double worst_u = 0.0;
  double worst_e = 0.0;
  for (const auto& s : solvers) {
    const SolveReport r = s.run();
    const double du = std::max(std::abs(r.primal.values[0] - 0.5), std::abs(r.primal.values[1] - 0.5));
    const double de = std::abs(energy_primal(r.primal, f, alpha, PNorm::one) - 0.5);
    worst_u = std::max(worst_u, du);
    worst_e = std::max(worst_e, de);
    o.check(du <= 1e-6 && de <= 1e-9, s.name);
  }
  o.note("|u - u*| " + fmt("%.1e", worst_u) + ", |E - 0.5| " + fmt("%.1e", worst_e) +
         "; decomposition solvers need 2x2 subdomains and do not apply to a 1x2 image");
  return o;
}

// 4. Both decomposition methods agree with the full-domain solution.
Outcome ddm_equals_full() {
  Outcome o;
  const GridDims dims{64, 64};
  const double alpha = 10.0;
  const Image clean = oracle::scene(dims);
  const Image f = noisy_scene(dims, 404);
  SolverParams full = accel_pd_defaults(alpha);
  full.rel_tol = 1e-10;
  full.max_iter = 1000000;
  const Image u_full = accel_pd_full(f, full).primal;

  double worst = 0.0;
  std::string psnrs;
  for (int method = 0; method < 2; ++method) {
    std::vector<std::string> rounded;
    for (SubdomainGrid ns : {SubdomainGrid{1, 1}, SubdomainGrid{2, 2}, SubdomainGrid{4, 4}}) {
      const Decomposition d = build_decomposition(dims, ns);
      const SolveReport r = method == 0 ? primal_ddm_solve(f, d, primal_params(alpha, 1e-6, 1e-8))
                                        : pdual_ddm_solve(f, d, pdual_params(alpha, 1e-6, 1e-8));
      const double rel = vec::distance(r.primal.values, u_full.values) / vec::norm2(u_full.values);
      if (ns.rows > 1) worst = std::max(worst, rel);
      rounded.push_back(round2(psnr(r.primal, clean)));
    }
    const char* name = method == 0 ? "primal" : "pdual";
    o.check(rounded[0] == rounded[1] && rounded[0] == rounded[2], std::string(name) + " PSNR constancy");
    psnrs += std::string(psnrs.empty() ? "" : ", ") + name + " PSNR " + rounded[0] + "/" + rounded[1] + "/" +
             rounded[2];
  }
  o.check(worst < 1e-3, "relative difference");
  o.note("max rel " + fmt("%.2e", worst) + ", " + psnrs);
  return o;
}

// 5. J_Gamma(p^(n)) - J_Gamma* <= 2 (4/alpha) |p^(0) - p*|^2 / (n+1)^2.
Outcome fista_rate() {
  Outcome o;
  std::mt19937_64 rng(505);
  const Image f = oracle::random_image({32, 32}, rng);
  const Decomposition d = build_decomposition(f.dims, {2, 2});
  const double alpha = 10.0;
  const PrimalDdmParams prm = primal_params(alpha, 0.0, 1e-10);
  const auto iters = primal_ddm_interface_iterates(f, d, prm, 10000);
  PrimalDdm eval(f, d, prm);
  const InterfaceVector& p_star = iters.back();
  const double j_star = eval.interface_energy(p_star);
  const double dist2 = vec::norm2_squared(p_star.values);
  double worst_ratio = 0.0;
  for (std::size_t n = 1; n <= 200; ++n) {
    const double gap = eval.interface_energy(iters[n]) - j_star;
    const double bound = 2.0 * (4.0 / alpha) * dist2 / double((n + 1) * (n + 1));
    worst_ratio = std::max(worst_ratio, gap / bound);
  }
  o.check(worst_ratio <= 1.0, "rate bound");
  o.note("max gap/bound " + fmt("%.3f", worst_ratio));
  return o;
}

// 6. Local solves of the primal-dual method need far fewer iterations.
Outcome inner_iterations() {
  Outcome o;
  const GridDims dims{256, 256};
  const double alpha = 10.0;
  const Image f = noisy_scene(dims, 606);
  const Decomposition d = build_decomposition(dims, {4, 4});
  PrimalDdmParams a = primal_params(alpha, 0.0, 1e-8);
  a.outer.max_iter = 100;
  PdualDdmParams b = pdual_params(alpha, 0.0, 1e-8);
  b.outer.max_iter = 100;
  const SolveReport ra = primal_ddm_solve(f, d, a);
  const SolveReport rb = pdual_ddm_solve(f, d, b);
  const double ratio = double(ra.max_inner_iters) / double(std::max<std::size_t>(rb.max_inner_iters, 1));
  o.check(ra.iterations == 100 && rb.iterations == 100, "100 outer iterations");
  o.check(ratio >= 5.0, "ratio >= 5");
  o.note("max inner primal " + std::to_string(ra.max_inner_iters) + ", pdual " +
         std::to_string(rb.max_inner_iters) + ", ratio " + fmt("%.2f", ratio));
  return o;
}

// 7. Peppers: noisy and denoised PSNR, constancy across nsub.
Outcome peppers() {
  Outcome o;
  std::string path;
  if (const char* env = std::getenv("ROFDD_PEPPERS")) path = env;
  else path = std::string(ROFDD_TEST_DATA) + "/peppers.pgm";
  if (!std::filesystem::exists(path)) {
    o.check(false, "Peppers image not available at " + path + " (set ROFDD_PEPPERS)");
    return o;
  }
  const Image clean = load_pgm(path);
  const Image f = add_gaussian_noise(clean, 0.0, 0.05, 0);
  const double noisy = psnr(f, clean);
  o.check(std::abs(noisy - 19.11) <= 0.15, "noisy PSNR " + fmt("%.2f", noisy) + " vs 19.11 +- 0.15");
  for (int method = 0; method < 2; ++method) {
    std::vector<double> vals;
    for (SubdomainGrid ns : {SubdomainGrid{1, 1}, SubdomainGrid{2, 2}, SubdomainGrid{4, 4}}) {
      const Decomposition d = build_decomposition(clean.dims, ns);
      const SolveReport r = method == 0 ? primal_ddm_solve(f, d, primal_ddm_defaults(10.0))
                                        : pdual_ddm_solve(f, d, pdual_ddm_defaults(10.0));
      vals.push_back(psnr(r.primal, clean));
    }
    const std::string name = method == 0 ? "primal" : "pdual";
    o.check(std::abs(vals[0] - 24.41) <= 0.3, name + " denoised PSNR " + fmt("%.2f", vals[0]) + " vs 24.41 +- 0.3");
    o.check(round2(vals[0]) == round2(vals[1]) && round2(vals[0]) == round2(vals[2]), name + " constancy");
    o.note(name + " " + round2(vals[0]) + "/" + round2(vals[1]) + "/" + round2(vals[2]));
  }
  o.note("noisy " + fmt("%.2f", noisy));
  return o;
}

std::string fingerprint(SolveReport r) {
  for (auto& rec : r.trace) rec.wall_clock_seconds = rec.virtual_wall_clock_seconds = 0.0;
  std::string out = write_pgm(r.primal) + write_trace_csv(r.trace);
  out.append(reinterpret_cast<const char*>(r.primal.values.data()), r.primal.values.size() * sizeof(double));
  return out;
}

// 8. Byte-identical results for equal seeds and different worker counts.
Outcome determinism() {
  Outcome o;
  const GridDims dims{64, 64};
  const Image f = noisy_scene(dims, 808);
  o.check(write_pgm(f) == write_pgm(noisy_scene(dims, 808)), "noise");
  const Decomposition d = build_decomposition(dims, {4, 4});
  for (int method = 0; method < 2; ++method) {
    std::string first;
    for (std::size_t workers : {1u, 2u, 4u, 1u}) {
      std::string fp;
      if (method == 0) {
        PrimalDdmParams p = primal_ddm_defaults(10.0);
        p.workers = workers;
        fp = fingerprint(primal_ddm_solve(f, d, p));
      } else {
        PdualDdmParams p = pdual_ddm_defaults(10.0);
        p.workers = workers;
        fp = fingerprint(pdual_ddm_solve(f, d, p));
      }
      if (first.empty()) first = fp;
      o.check(fp == first, std::string(method == 0 ? "primal" : "pdual") + " workers " + std::to_string(workers));
    }
  }
  o.note("primal and pdual DDM, workers 1/2/4/1, image + trace bytes");
  return o;
}

struct Criterion {
  const char* title;
  double limit_seconds;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {"operator properties", 10.0, operator_properties},
    {"gradient oracles", 60.0, gradient_oracles},
    {"two-pixel closed form", 5.0, two_pixel},
    {"decomposition equals full domain", 600.0, ddm_equals_full},
    {"interface FISTA rate", 600.0, fista_rate},
    {"inner-iteration advantage", 1800.0, inner_iterations},
    {"Peppers reproduction", 1800.0, peppers},
    {"determinism across worker counts", 300.0, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  constexpr int count = static_cast<int>(std::size(kCriteria));
  std::vector<int> selected;
  for (int k = 1; k < argc; ++k) {
    const int n = std::atoi(argv[k]);
    if (n < 1 || n > count) {
      std::fprintf(stderr, "usage: acceptance [1-%d ...]\n", count);
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= count; ++n) selected.push_back(n);

  bool all = true;
  for (int n : selected) {
    const Criterion& c = kCriteria[n - 1];
    Stopwatch sw;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = sw.seconds();
    o.check(secs < c.limit_seconds, "runtime limit " + fmt("%.0f s", c.limit_seconds));
    std::printf("[%s] %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", n, c.title, o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
