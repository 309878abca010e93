// rofdd: command-line front end for the TV denoising solvers.
//
//   rofdd add-noise        --input clean.pgm --output noisy.pgm [--variance --mean --seed]
//   rofdd denoise          --input noisy.pgm --output u.pgm [solver flags] [--trace t.csv]
//   rofdd psnr             --input u.pgm --reference clean.pgm [--max 1]
//   rofdd benchmark        --input img.pgm --trace t.csv [solver flags] [--reference-energy auto|VALUE]
//   rofdd reference-energy --input noisy.pgm [--alpha --pnorm --iterations]
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 malformed input file, 4 invalid
// parameters, 5 inadmissible decomposition, 6 solver failure.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rofdd/rofdd.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kFormat = 3,
  kParameter = 4,
  kDecomposition = 5,
  kSolver = 6,
};

struct RunConfig {
  std::string input;
  std::string output;
  std::string reference;
  std::string trace;
  std::string solver = "primal-ddm";
  double alpha = 10.0;
  std::string nsub = "1x1";
  int pnorm = 1;
  double outer_tol = 1e-3;
  double inner_tol = 1e-5;
  std::size_t max_outer = 1000;
  std::size_t max_inner = 100000;
  std::size_t trace_stride = 1;
  std::string workers = "auto";

  // Outer parameters (primal DDM: L; primal-dual DDM: L, sigma, tau = 1/(L sigma)).
  std::optional<double> outer_L;
  std::optional<double> sigma;
  // Inner / full-domain parameters.
  std::optional<double> inner_L;
  std::optional<double> gamma;
  std::optional<double> tau0;
  std::optional<double> delta;
  std::optional<double> theta0;

  // In-memory noise applied to the input before solving (input taken as clean).
  std::optional<std::uint64_t> noise_seed;
  double noise_mean = 0.0;
  double noise_variance = 0.05;

  std::uint64_t seed = 0;
  double max_val = 1.0;
  std::size_t iterations = 10000;
  std::string reference_energy;
};

std::string fmt_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string fmt_fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, r.ptr);
}

rofdd::SubdomainGrid parse_nsub(const std::string& s) {
  const auto x = s.find('x');
  std::size_t a = 0;
  std::size_t b = 0;
  bool ok = x != std::string::npos;
  if (ok) {
    const auto r1 = std::from_chars(s.data(), s.data() + x, a);
    const auto r2 = std::from_chars(s.data() + x + 1, s.data() + s.size(), b);
    ok = r1.ec == std::errc() && r1.ptr == s.data() + x && r2.ec == std::errc() &&
         r2.ptr == s.data() + s.size() && a > 0 && b > 0;
  }
  if (!ok) throw rofdd::ParameterError("--nsub expects ROWSxCOLS, got '" + s + "'");
  return {a, b};
}

std::size_t parse_workers(const std::string& s) {
  if (s == "auto") return 0;
  std::size_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || v == 0) {
    throw rofdd::ParameterError("--workers expects a positive integer or 'auto', got '" + s + "'");
  }
  return v;
}

struct Problem {
  rofdd::Image clean;  // empty unless noise was synthesized in memory
  rofdd::Image f;
};

Problem load_problem(const RunConfig& c) {
  Problem pb;
  rofdd::Image img = rofdd::load_pgm(c.input);
  if (c.noise_seed) {
    pb.f = rofdd::add_gaussian_noise(img, c.noise_mean, c.noise_variance, *c.noise_seed);
    pb.clean = std::move(img);
  } else {
    pb.f = std::move(img);
  }
  return pb;
}

/// Solver dispatch; fills `header` with the effective configuration.
rofdd::SolveReport run_solver(const RunConfig& c, const rofdd::Image& f,
                              std::vector<std::string>& header) {
  using namespace rofdd;
  const PNorm pn = pnorm_from_int(c.pnorm);
  const SubdomainGrid nsub = parse_nsub(c.nsub);
  const std::size_t workers = parse_workers(c.workers);
  auto kv = [&](const std::string& k, const std::string& v) { header.push_back(k + "=" + v); };
  kv("solver", c.solver);
  kv("alpha", fmt_real(c.alpha));
  kv("pnorm", std::to_string(c.pnorm));
  kv("dims", to_string(f.dims));

  auto apply_inner = [&](SolverParams& p) {
    if (c.inner_L) p.lipschitz_L = *c.inner_L;
    if (c.gamma) p.gamma = *c.gamma;
    if (c.delta) p.delta = *c.delta;
    if (c.theta0) p.theta0 = *c.theta0;
    p.rel_tol = c.inner_tol;
    p.max_iter = c.max_inner;
    p.pnorm = pn;
    p.trace_stride = c.trace_stride;
  };
  auto apply_accel = [&](SolverParams& p) {
    apply_inner(p);
    if (c.tau0) p.tau0 = *c.tau0;
    p.sigma0 = 1.0 / (p.lipschitz_L * p.tau0);
  };
  auto describe_accel = [&](const std::string& pre, const SolverParams& p) {
    kv(pre + "L", fmt_real(p.lipschitz_L));
    kv(pre + "gamma", fmt_real(p.gamma));
    kv(pre + "tau0", fmt_real(p.tau0));
    kv(pre + "sigma0", fmt_real(p.sigma0));
    kv(pre + "tol", fmt_real(p.rel_tol));
    kv(pre + "max_iter", std::to_string(p.max_iter));
  };

  if (c.solver == "fista" || c.solver == "accel-pd") {
    if (nsub.rows != 1 || nsub.cols != 1) {
      throw ParameterError("solver '" + c.solver + "' runs on the full domain; use --nsub 1x1");
    }
    if (c.solver == "fista") {
      SolverParams p = fista_defaults(c.alpha);
      apply_inner(p);
      if (c.outer_L) p.lipschitz_L = *c.outer_L;
      kv("L", fmt_real(p.lipschitz_L));
      kv("tol", fmt_real(p.rel_tol));
      kv("max_iter", std::to_string(p.max_iter));
      return fista_dual_full(f, p);
    }
    SolverParams p = accel_pd_defaults(c.alpha);
    apply_accel(p);
    describe_accel("", p);
    return accel_pd_full(f, p);
  }

  if (pn != PNorm::one) throw ParameterError("decomposition solvers support --pnorm 1 only");
  const Decomposition d = build_decomposition(f.dims, nsub);
  kv("nsub", std::to_string(nsub.rows) + "x" + std::to_string(nsub.cols));
  if (c.solver == "primal-ddm") {
    PrimalDdmParams p = primal_ddm_defaults(c.alpha);
    if (c.outer_L) p.outer.lipschitz_L = *c.outer_L;
    p.outer.rel_tol = c.outer_tol;
    p.outer.max_iter = c.max_outer;
    p.outer.trace_stride = c.trace_stride;
    apply_accel(p.inner);
    p.workers = workers;
    kv("outer_L", fmt_real(p.outer.lipschitz_L));
    kv("outer_tol", fmt_real(p.outer.rel_tol));
    kv("max_outer", std::to_string(p.outer.max_iter));
    describe_accel("inner_", p.inner);
    return primal_ddm_solve(f, d, p);
  }
  if (c.solver == "pdual-ddm") {
    PdualDdmParams p = pdual_ddm_defaults(c.alpha);
    if (c.outer_L) p.outer.lipschitz_L = *c.outer_L;
    if (c.sigma) p.outer.sigma = *c.sigma;
    p.outer.tau = 1.0 / (p.outer.lipschitz_L * p.outer.sigma);
    p.outer.rel_tol = c.outer_tol;
    p.outer.max_iter = c.max_outer;
    p.outer.trace_stride = c.trace_stride;
    p.inner = linear_pd_defaults(c.alpha, p.outer.tau);
    apply_inner(p.inner);
    p.workers = workers;
    const LinearPdSteps st = validate_pdual_ddm(p);
    kv("outer_L", fmt_real(p.outer.lipschitz_L));
    kv("sigma", fmt_real(p.outer.sigma));
    kv("tau", fmt_real(p.outer.tau));
    kv("outer_tol", fmt_real(p.outer.rel_tol));
    kv("max_outer", std::to_string(p.outer.max_iter));
    kv("inner_L", fmt_real(p.inner.lipschitz_L));
    kv("inner_gamma", fmt_real(p.inner.gamma));
    kv("inner_delta", fmt_real(st.delta));
    kv("inner_theta0", fmt_real(st.theta0));
    kv("inner_tol", fmt_real(p.inner.rel_tol));
    kv("inner_max_iter", std::to_string(p.inner.max_iter));
    return pdual_ddm_solve(f, d, p);
  }
  throw ParameterError("unknown solver '" + c.solver +
                       "' (expected fista, accel-pd, primal-ddm or pdual-ddm)");
}

void noise_header(const RunConfig& c, std::vector<std::string>& header) {
  if (!c.noise_seed) return;
  header.push_back("noise_seed=" + std::to_string(*c.noise_seed));
  header.push_back("noise_mean=" + fmt_real(c.noise_mean));
  header.push_back("noise_variance=" + fmt_real(c.noise_variance));
  header.push_back("noise_clamped=false");
}

// Cached reference energy: one line "alpha pnorm iterations input_hash energy".
std::string cache_key(const RunConfig& c, const std::string& bytes) {
  return fmt_real(c.alpha) + " " + std::to_string(c.pnorm) + " " + std::to_string(c.iterations) +
         " " + std::to_string(std::hash<std::string>{}(bytes));
}

double reference_energy(const RunConfig& c, bool verbose) {
  const std::string bytes = rofdd::read_file(c.input);
  const std::string key = cache_key(c, bytes);
  const std::string cache = c.input + ".ref-energy";
  try {
    const std::string text = rofdd::read_file(cache);
    const auto sp = text.rfind(' ');
    if (sp != std::string::npos && text.substr(0, sp) == key) {
      std::string tail = text.substr(sp + 1);
      while (!tail.empty() && (tail.back() == '\n' || tail.back() == '\r')) tail.pop_back();
      double v = 0.0;
      const auto r = std::from_chars(tail.data(), tail.data() + tail.size(), v);
      if (r.ec == std::errc() && r.ptr == tail.data() + tail.size()) {
        if (verbose) std::cerr << "using cached reference energy from " << cache << "\n";
        return v;
      }
    }
  } catch (const rofdd::IoError&) {
  }
  rofdd::Image f;
  try {
    f = rofdd::read_pgm(bytes);
  } catch (const rofdd::FormatError& e) {
    throw rofdd::FormatError(c.input + ": " + e.what());
  }
  rofdd::SolverParams p = rofdd::reference_params(c.alpha, rofdd::pnorm_from_int(c.pnorm));
  p.max_iter = c.iterations;
  const double e = rofdd::reference_minimum(f, p);
  rofdd::write_file(cache, key + " " + fmt_real(e) + "\n");
  return e;
}

int cmd_add_noise(const RunConfig& c) {
  const rofdd::Image f = rofdd::load_pgm(c.input);
  rofdd::save_pgm(c.output, rofdd::add_gaussian_noise(f, c.noise_mean, c.noise_variance, c.seed));
  return kOk;
}

int cmd_denoise(const RunConfig& c) {
  const Problem pb = load_problem(c);
  std::vector<std::string> header{"rofdd denoise"};
  noise_header(c, header);
  rofdd::SolveReport rep = run_solver(c, pb.f, header);
  rofdd::save_pgm(c.output, rep.primal);
  if (!c.trace.empty()) {
    // Timings are zeroed so that traces are byte-identical across runs.
    for (auto& r : rep.trace) {
      r.wall_clock_seconds = 0.0;
      r.virtual_wall_clock_seconds = 0.0;
    }
    header.push_back("timing=omitted");
    rofdd::write_file(c.trace, rofdd::write_trace_csv(rep.trace, header));
  }
  std::cerr << "iterations=" << rep.iterations << " stop=" << rofdd::to_string(rep.stop_reason)
            << " max_inner=" << rep.max_inner_iters << "\n";
  if (!pb.clean.values.empty()) {
    std::cout << "psnr_noisy " << fmt_fixed(rofdd::psnr(pb.f, pb.clean), 4) << "\n"
              << "psnr_denoised " << fmt_fixed(rofdd::psnr(rep.primal, pb.clean), 4) << "\n";
  }
  return kOk;
}

int cmd_psnr(const RunConfig& c) {
  const rofdd::Image u = rofdd::load_pgm(c.input);
  const rofdd::Image ref = rofdd::load_pgm(c.reference);
  if (!(c.max_val > 0.0)) throw rofdd::ParameterError("--max must be positive");
  std::cout << fmt_fixed(rofdd::psnr(u, ref, c.max_val), 4) << "\n";
  return kOk;
}

int cmd_benchmark(const RunConfig& c) {
  const Problem pb = load_problem(c);
  std::vector<std::string> header{"rofdd benchmark"};
  noise_header(c, header);
  std::optional<double> e_star;
  if (c.reference_energy == "auto") {
    if (c.noise_seed) {
      // The noisy datum only exists in memory; no cache file to attach to.
      rofdd::SolverParams p = rofdd::reference_params(c.alpha, rofdd::pnorm_from_int(c.pnorm));
      p.max_iter = c.iterations;
      e_star = rofdd::reference_minimum(pb.f, p);
    } else {
      e_star = reference_energy(c, true);
    }
  } else if (!c.reference_energy.empty()) {
    double v = 0.0;
    const auto& s = c.reference_energy;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      throw rofdd::ParameterError("--reference-energy expects 'auto' or a number, got '" + s + "'");
    }
    e_star = v;
  }
  rofdd::SolveReport rep = run_solver(c, pb.f, header);
  if (e_star) {
    rofdd::attach_relative_gap(rep, *e_star);
    header.push_back("reference_energy=" + fmt_real(*e_star));
  }
  rofdd::write_file(c.trace, rofdd::write_trace_csv(rep.trace, header));
  if (!c.output.empty()) rofdd::save_pgm(c.output, rep.primal);
  std::cout << "iterations " << rep.iterations << "\n"
            << "stop " << rofdd::to_string(rep.stop_reason) << "\n"
            << "max_inner_iters " << rep.max_inner_iters << "\n"
            << "energy " << fmt_real(rep.trace.back().primal_energy) << "\n"
            << "wall_clock_seconds " << fmt_fixed(rep.wall_clock_seconds, 3) << "\n"
            << "virtual_wall_clock_seconds " << fmt_fixed(rep.virtual_wall_clock_seconds, 3)
            << "\n";
  if (!pb.clean.values.empty()) {
    std::cout << "psnr_noisy " << fmt_fixed(rofdd::psnr(pb.f, pb.clean), 4) << "\n"
              << "psnr_denoised " << fmt_fixed(rofdd::psnr(rep.primal, pb.clean), 4) << "\n";
  }
  return kOk;
}

int cmd_reference_energy(const RunConfig& c) {
  std::cout << fmt_real(reference_energy(c, true)) << "\n";
  return kOk;
}

void add_solver_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--solver", c.solver, "fista | accel-pd | primal-ddm | pdual-ddm")
      ->check(CLI::IsMember({"fista", "accel-pd", "primal-ddm", "pdual-ddm"}))
      ->capture_default_str();
  sub->add_option("--alpha", c.alpha, "fidelity weight")->capture_default_str();
  sub->add_option("--nsub", c.nsub, "subdomain grid ROWSxCOLS")->capture_default_str();
  sub->add_option("--pnorm", c.pnorm, "1 (anisotropic) or 2 (isotropic, full-domain only)")
      ->capture_default_str();
  sub->add_option("--outer-tol", c.outer_tol, "relative energy change stop (DDM)")
      ->capture_default_str();
  sub->add_option("--inner-tol", c.inner_tol,
                  "relative dual change stop (local solves; full-domain solvers)")
      ->capture_default_str();
  sub->add_option("--max-outer", c.max_outer)->capture_default_str();
  sub->add_option("--max-inner", c.max_inner, "also the iteration cap of full-domain solvers")
      ->capture_default_str();
  sub->add_option("--trace-stride", c.trace_stride)->capture_default_str();
  sub->add_option("--workers", c.workers, "positive integer or auto (env ROFDD_WORKERS)")
      ->capture_default_str();
  sub->add_option("--outer-L", c.outer_L, "DDM outer L (primal 4, primal-dual 2); FISTA L (8)");
  sub->add_option("--sigma", c.sigma, "primal-dual DDM sigma (0.02); tau = 1/(L sigma)");
  sub->add_option("--inner-L", c.inner_L, "local/accelerated solver L (8)");
  sub->add_option("--gamma", c.gamma, "inner gamma (0.125 alpha accelerated, 0.5 alpha linear)");
  sub->add_option("--tau0", c.tau0, "accelerated solver tau0 (0.01); sigma0 = 1/(L tau0)");
  sub->add_option("--delta", c.delta, "linear local solver delta (1/tau)");
  sub->add_option("--theta0", c.theta0, "linear local solver theta0 (1/(1+mu))");
  sub->add_option("--noise-seed", c.noise_seed,
                  "treat input as clean, add unclamped noise in memory, report PSNR");
  sub->add_option("--noise-mean", c.noise_mean)->capture_default_str();
  sub->add_option("--noise-variance", c.noise_variance)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Total-variation denoising with domain decomposition"};
  app.require_subcommand(1);
  RunConfig c;

  auto* noise = app.add_subcommand("add-noise", "add seeded Gaussian noise to a PGM");
  noise->add_option("--input", c.input)->required();
  noise->add_option("--output", c.output)->required();
  noise->add_option("--mean", c.noise_mean)->capture_default_str();
  noise->add_option("--variance", c.noise_variance)->capture_default_str();
  noise->add_option("--seed", c.seed)->capture_default_str();

  auto* denoise = app.add_subcommand("denoise", "denoise a PGM");
  denoise->add_option("--input", c.input)->required();
  denoise->add_option("--output", c.output)->required();
  denoise->add_option("--trace", c.trace, "CSV trace (timings zeroed)");
  add_solver_flags(denoise, c);

  auto* ps = app.add_subcommand("psnr", "PSNR of an image against a reference");
  ps->add_option("--input", c.input)->required();
  ps->add_option("--reference", c.reference)->required();
  ps->add_option("--max", c.max_val)->capture_default_str();

  auto* bench = app.add_subcommand("benchmark", "solve with a timed per-iteration trace");
  bench->add_option("--input", c.input)->required();
  bench->add_option("--trace", c.trace)->required();
  bench->add_option("--output", c.output, "optional denoised PGM");
  bench->add_option("--reference-energy", c.reference_energy,
                    "'auto' (cached reference run) or a value of E(u*)");
  bench->add_option("--iterations", c.iterations, "reference run length")->capture_default_str();
  add_solver_flags(bench, c);

  auto* ref = app.add_subcommand("reference-energy", "compute and cache E(u*)");
  ref->add_option("--input", c.input)->required();
  ref->add_option("--alpha", c.alpha)->capture_default_str();
  ref->add_option("--pnorm", c.pnorm)->capture_default_str();
  ref->add_option("--iterations", c.iterations)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*noise) return cmd_add_noise(c);
    if (*denoise) return cmd_denoise(c);
    if (*ps) return cmd_psnr(c);
    if (*bench) return cmd_benchmark(c);
    if (*ref) return cmd_reference_energy(c);
  } catch (const rofdd::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const rofdd::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFormat;
  } catch (const rofdd::DecompositionError& e) {
    std::cerr << "decomposition error: " << e.what() << "\n";
    return kDecomposition;
  } catch (const rofdd::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const rofdd::Error& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return kParameter;
  }
  return kUsage;
}
