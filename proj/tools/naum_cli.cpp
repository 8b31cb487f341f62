// Command-line front end: single solves, benchmark runs, and self checks.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include <naum/bench.hpp>

namespace {

using namespace naum;

struct SolveFlags {
  std::string input;
  std::string format = "dense-csv";
  std::size_t rank = 0;
  double alpha = 0.0;  // 0 picks the per-problem default
  double eta = 0.0;
  double sr = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_iters = 5000;
  double max_seconds = 0.0;  // 0 = unlimited
  double tol_obj = 1e-4;
  double tol_change = 1e-4;
  std::string scheme_x, scheme_y;
  std::string out;
};

void add_common_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--input", f.input, "data file")->required();
  cmd->add_option("--format", f.format, "input file format")
      ->check(CLI::IsMember({"dense-csv", "dense-binary", "sparse-coordinate"}));
  cmd->add_option("--rank", f.rank, "factorization rank")
      ->required()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "coupling weight (0 = per-problem default)");
  cmd->add_option("--seed", f.seed, "seed for starts and masks");
  cmd->add_option("--max-iters", f.max_iters, "outer iteration cap");
  cmd->add_option("--max-seconds", f.max_seconds, "wall-clock cap in seconds (0 = none)");
  cmd->add_option("--tol-obj", f.tol_obj, "relative objective-change tolerance");
  cmd->add_option("--tol-change", f.tol_change, "relative iterate-change tolerance");
  cmd->add_option("--scheme-x", f.scheme_x, "update scheme for the left factor")
      ->check(CLI::IsMember({"prox", "proxlin", "hier"}));
  cmd->add_option("--scheme-y", f.scheme_y, "update scheme for the right factor")
      ->check(CLI::IsMember({"prox", "proxlin", "hier"}));
  cmd->add_option("--out", f.out, "trace CSV path");
}

SolveOptions solve_options(const SolveFlags& f) {
  SolveOptions opt;
  opt.max_iters = f.max_iters;
  opt.max_seconds =
      f.max_seconds > 0.0 ? f.max_seconds : std::numeric_limits<double>::infinity();
  opt.tol_obj = f.tol_obj;
  opt.tol_change = f.tol_change;
  return opt;
}

SolverParams solver_params(const SolveFlags& f, double default_alpha, Scheme fallback) {
  SolverParams params = derive_params(f.alpha != 0.0 ? f.alpha : default_alpha);
  params.scheme_x = f.scheme_x.empty() ? fallback : parse_scheme(f.scheme_x);
  params.scheme_y = f.scheme_y.empty() ? fallback : parse_scheme(f.scheme_y);
  return params;
}

void print_summary(const char* algorithm, const SolveResult& res, double relerr,
                   double recerr) {
  const Trace& tr = res.trace;
  const bool empty = tr.records.empty();
  std::printf("algorithm %s\n", algorithm);
  std::printf("iterations %zu\n", tr.records.size());
  std::printf("stop_reason %s\n", to_string(tr.reason));
  std::printf("objective %.17g\n",
              empty ? tr.initial_objective : tr.records.back().objective);
  if (std::isfinite(relerr)) std::printf("relerr %.17g\n", relerr);
  if (std::isfinite(recerr)) std::printf("recerr %.17g\n", recerr);
  std::printf("seconds %.6f\n", empty ? 0.0 : tr.records.back().seconds);
}

int run_nmf(const SolveFlags& f) {
  const LoadedMatrix loaded = load_matrix(f.input, parse_format(f.format));
  NmfProblem prob;
  if (loaded.dense)
    prob.data = *loaded.dense;
  else
    prob.data = *loaded.sparse;
  prob.r = f.rank;
  prob.validate();
  const SolverParams params = solver_params(f, 0.6, Scheme::HierarchicalProx);
  const InitPair init = init_nmf(prob.rows(), prob.cols(), prob.r, prob.data, f.seed);
  const SolveResult res = nmf_solve(prob, params, init.x, init.y, solve_options(f));
  if (!f.out.empty()) write_trace_csv(f.out, res.trace);
  print_summary("naum-nmf", res, relative_error(res.x, res.y, prob.data),
                std::numeric_limits<double>::quiet_NaN());
  return 0;
}

int run_mc(const SolveFlags& f) {
  const LoadedMatrix loaded = load_matrix(f.input, parse_format(f.format));
  McProblem prob;
  prob.r = f.rank;
  prob.eta = f.eta;
  DenseMatrix truth;
  if (loaded.sparse) {
    // a sparse file IS the observation set; --sr is ignored
    const SparseMatrix& sp = *loaded.sparse;
    prob.m = sp.rows();
    prob.n = sp.cols();
    prob.omega.m = sp.rows();
    prob.omega.n = sp.cols();
    for (std::size_t i = 0; i < sp.rows(); ++i)
      for (std::size_t idx = sp.row_ptr()[i]; idx < sp.row_ptr()[i + 1]; ++idx)
        prob.omega.entries.emplace_back(static_cast<std::uint32_t>(i),
                                        sp.col_index()[idx]);
    prob.observed.assign(sp.values().begin(), sp.values().end());
  } else {
    truth = *loaded.dense;
    prob.m = truth.rows();
    prob.n = truth.cols();
    prob.omega = sample_mask(prob.m, prob.n, f.sr, f.seed);
    prob.observed.reserve(prob.omega.count());
    for (const auto& [i, j] : prob.omega.entries) prob.observed.push_back(truth(i, j));
  }
  prob.validate();
  const SolverParams params = solver_params(f, 0.4, Scheme::ProxLinear);
  const InitPair init = init_mc(prob.m, prob.n, prob.r, f.seed);
  const SolveResult res = mc_solve(prob, params, init.x, init.y, solve_options(f));
  if (!f.out.empty()) write_trace_csv(f.out, res.trace);
  const double recerr = truth.size() > 0
                            ? relative_error(res.x, res.y, truth)
                            : std::numeric_limits<double>::quiet_NaN();
  print_summary("naum-mc", res, mc_observed_relerr(prob, res.x, res.y), recerr);
  return 0;
}

int run_bench(const std::string& config_path, std::size_t jobs,
              const std::string& out_override) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ParseError(config_path + ": cannot open");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(config_path + ": " + e.what());
  }
  TrialConfig cfg = parse_trial_config(j);
  if (!out_override.empty()) cfg.output = out_override;
  const Report rep = run_trials(cfg, jobs);
  if (cfg.output.empty()) {
    std::cout << report_to_json(rep).dump(2) << '\n';
  } else {
    write_report(cfg.output, rep);
    std::printf("report written to %s\n", cfg.output.c_str());
  }
  return 0;
}

// --------------------------------------------------------------------------
// Self checks: each suite counts independent pass/fail checks so a regression
// points at the broken area instead of a bare nonzero exit.

struct Instance {
  ProblemSpec spec;
  DenseMatrix x, y;
};

Instance random_instance(std::uint64_t seed) {
  CounterRng root(seed);
  const std::size_t m = 2 + static_cast<std::size_t>(root.split(1).below(11));
  const std::size_t n = 2 + static_cast<std::size_t>(root.split(2).below(11));
  const std::size_t r = 1 + static_cast<std::size_t>(root.split(3).below(4));
  Instance inst;
  inst.spec.m = m;
  inst.spec.n = n;
  inst.spec.r = r;
  inst.spec.psi = ProxOracle::box(0.0, 8.0);
  inst.spec.phi = ProxOracle::box(0.0, 8.0);
  if (seed % 2 == 0)
    inst.spec.map = LinearMap::identity(m, n);
  else
    inst.spec.map = LinearMap::sampling(sample_mask(m, n, 0.6, seed));
  CounterRng rb = root.split(4);
  inst.spec.b.resize(inst.spec.map.q());
  for (double& v : inst.spec.b) v = 2.0 * rb.uniform() - 1.0;
  CounterRng rx = root.split(5), ry = root.split(6);
  inst.x = DenseMatrix(m, r);
  for (std::size_t i = 0; i < inst.x.size(); ++i) inst.x.data()[i] = 8.0 * rx.uniform();
  inst.y = DenseMatrix(n, r);
  for (std::size_t i = 0; i < inst.y.size(); ++i) inst.y.data()[i] = 8.0 * ry.uniform();
  return inst;
}

// F(X,Y) must equal the three-block potential evaluated at its own Z.
void check_potential_identity(std::size_t& passed, std::size_t& total) {
  const double alphas[] = {0.4, 0.6, 0.8, 1.1, 2.0};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Instance inst = random_instance(seed);
    const SolverParams params = derive_params(alphas[seed % 5]);
    const double f = objective(inst.spec, inst.x, inst.y);
    const DenseMatrix z = z_formula(inst.spec, params, inst.x, inst.y);
    const double theta = potential(inst.spec, params, inst.x, inst.y, z);
    ++total;
    if (std::abs(f - theta) <= 1e-10 * (1.0 + std::abs(f))) ++passed;
  }
}

// Line-search health on short factorization and completion runs. Tight
// tolerances keep the runs long but stop them once progress per iteration
// falls to rounding level.
void check_descent(std::size_t& passed, std::size_t& total) {
  SolveOptions opt;
  opt.max_iters = 150;
  opt.tol_obj = 1e-12;
  opt.tol_change = 1e-13;
  auto healthy = [](const Trace& tr) {
    return tr.descent_violations == 0 && tr.cap_violations == 0 &&
           tr.forced_accepts == 0;
  };
  for (double alpha : {0.6, 2.0}) {
    NmfProblem prob;
    prob.data = detail::abs_randn(12, 10, CounterRng(31));
    prob.r = 3;
    const InitPair init = init_nmf(12, 10, 3, prob.data, 7);
    const SolveResult res =
        nmf_solve(prob, derive_params(alpha), init.x, init.y, opt);
    ++total;
    if (healthy(res.trace)) ++passed;
  }
  for (double alpha : {0.4, 2.0}) {
    McProblem prob;
    prob.m = 12;
    prob.n = 10;
    prob.r = 2;
    const DenseMatrix truth = matmul_a_bt(randn_matrix(12, 2, CounterRng(32)),
                                          randn_matrix(10, 2, CounterRng(33)));
    prob.omega = sample_mask(12, 10, 0.6, 5);
    for (const auto& [i, j] : prob.omega.entries) prob.observed.push_back(truth(i, j));
    prob.eta = 0.01;
    SolverParams params = derive_params(alpha);
    params.scheme_x = params.scheme_y = Scheme::ProxLinear;
    const InitPair init = init_mc(12, 10, 2, 5);
    const SolveResult res = mc_solve(prob, params, init.x, init.y, opt);
    ++total;
    if (healthy(res.trace)) ++passed;
  }
}

// Proximal points must beat a scalar grid scan / random perturbations.
void check_prox_oracles(std::size_t& passed, std::size_t& total) {
  CounterRng rng(77);
  const ProxOracle box = ProxOracle::box(-0.5, 0.8);
  const ProxOracle l1 = ProxOracle::scaled_l1(0.7);
  for (const ProxOracle* g : {&box, &l1}) {
    for (int k = 0; k < 20; ++k) {
      const double v = 4.0 * rng.uniform() - 2.0;
      const double t = 0.05 + 2.0 * rng.uniform();
      const double w = g->prox_entry(t, v, 0, 0);
      auto cost = [&](double u) {
        const DenseMatrix one{{u}};
        return g->eval(one) + (u - v) * (u - v) / (2.0 * t);
      };
      double best = std::numeric_limits<double>::infinity();
      for (double u = -2.5; u <= 2.5; u += 1e-3) best = std::min(best, cost(u));
      ++total;
      if (cost(w) <= best + 1e-9) ++passed;
    }
  }
  // singular-value shrinkage: the prox point beats nearby candidates
  const ProxOracle nuc = ProxOracle::scaled_nuclear(1.3);
  const DenseMatrix v = randn_matrix(6, 4, CounterRng(78));
  const double t = 0.8;
  const DenseMatrix w = nuc.prox(t, v);
  auto cost = [&](const DenseMatrix& u) {
    return nuc.eval(u) + frob_sq(u - v) / (2.0 * t);
  };
  const double at_w = cost(w);
  ++total;
  if (at_w <= cost(v) + 1e-12 && at_w <= cost(DenseMatrix(6, 4)) + 1e-12) ++passed;
  for (int k = 0; k < 12; ++k) {
    const double scale = k % 2 == 0 ? 1e-2 : 1.0;
    const DenseMatrix u = w + scale * randn_matrix(6, 4, CounterRng(100 + k));
    ++total;
    if (at_w <= cost(u) + 1e-12) ++passed;
  }
}

// Cached factorization/completion steppers must track the dense reference.
// Each step gets a fresh reference built from the live iterate, so the
// comparison measures the step itself rather than accumulated path drift.
void check_implicit_vs_dense(std::size_t& passed, std::size_t& total) {
  const double rel = 1e-10;
  auto close = [&](double a, double b) {
    return std::abs(a - b) <= rel * (1.0 + std::max(std::abs(a), std::abs(b)));
  };
  {
    NmfProblem prob;
    prob.data = detail::abs_randn(10, 8, CounterRng(41));
    prob.r = 2;
    prob.x_max = prob.y_max = 5.0;
    const SolverParams params = derive_params(0.6);
    const ProblemSpec spec = nmf_problem_spec(prob);
    const InitPair init = init_nmf(10, 8, 2, prob.data, 3);
    NmfStepper fast(prob, params, init.x, init.y);
    const double coef = params.alpha + 2.0 * params.gamma * params.rho;
    bool ok = true;
    fast.initial_objective();
    for (int k = 0; k < 12 && ok; ++k) {
      GenericStepper slow(spec, params, fast.x(), fast.y());
      ok = close(fast.current_objective(), slow.initial_objective());
      fast.begin_iteration();
      slow.begin_iteration();
      // step sizes at the curvature-safe level so the trajectory stays bounded
      const double mu = coef * fast.yk_fro_sq() + 1.0 + 0.1 * k;
      fast.make_u(mu);
      slow.make_u(mu);
      const double sigma = coef * fast.u_fro_sq() + 1.0 + 0.2 * k;
      fast.make_v(sigma);
      slow.make_v(sigma);
      ok = ok && close(fast.candidate_objective(), slow.candidate_objective()) &&
           close(fast.dx_sq(), slow.dx_sq()) && close(fast.dy_sq(), slow.dy_sq());
      fast.accept(0);
      slow.accept(0);
      ok = ok && max_abs_diff(fast.x(), slow.x()) <= rel &&
           max_abs_diff(fast.y(), slow.y()) <= rel;
    }
    ++total;
    if (ok) ++passed;
  }
  {
    McProblem prob;
    prob.m = 10;
    prob.n = 8;
    prob.r = 2;
    const DenseMatrix truth = matmul_a_bt(randn_matrix(10, 2, CounterRng(42)),
                                          randn_matrix(8, 2, CounterRng(43)));
    prob.omega = sample_mask(10, 8, 0.5, 9);
    for (const auto& [i, j] : prob.omega.entries) prob.observed.push_back(truth(i, j));
    prob.eta = 0.05;
    SolverParams params = derive_params(0.4);
    params.scheme_x = params.scheme_y = Scheme::ProxLinear;
    const ProblemSpec spec = mc_problem_spec(prob);
    const InitPair init = init_mc(10, 8, 2, 9);
    McStepper fast(prob, params, init.x, init.y);
    const double coef = params.alpha + 2.0 * params.gamma * params.rho;
    bool ok = true;
    fast.initial_objective();
    for (int k = 0; k < 12 && ok; ++k) {
      GenericStepper slow(spec, params, fast.x(), fast.y());
      ok = close(fast.current_objective(), slow.initial_objective());
      fast.begin_iteration();
      slow.begin_iteration();
      const double mu = coef * fast.yk_fro_sq() + 1.0 + 0.1 * k;
      fast.make_u(mu);
      slow.make_u(mu);
      const double sigma = coef * fast.u_fro_sq() + 1.0 + 0.2 * k;
      fast.make_v(sigma);
      slow.make_v(sigma);
      ok = ok && close(fast.candidate_objective(), slow.candidate_objective()) &&
           close(fast.dx_sq(), slow.dx_sq()) && close(fast.dy_sq(), slow.dy_sq());
      fast.accept(0);
      slow.accept(0);
      ok = ok && max_abs_diff(fast.x(), slow.x()) <= rel &&
           max_abs_diff(fast.y(), slow.y()) <= rel;
    }
    ++total;
    if (ok) ++passed;
  }
}

int run_verify() {
  struct Suite {
    const char* name;
    void (*run)(std::size_t&, std::size_t&);
  };
  const Suite suites[] = {
      {"potential-identity", check_potential_identity},
      {"descent", check_descent},
      {"prox-oracles", check_prox_oracles},
      {"implicit-vs-dense", check_implicit_vs_dense},
  };
  std::size_t failed = 0;
  for (const Suite& s : suites) {
    std::size_t passed = 0, total = 0;
    s.run(passed, total);
    std::printf("%s: %zu/%zu passed\n", s.name, passed, total);
    failed += total - passed;
  }
  if (failed > 0) {
    std::printf("%zu checks failed\n", failed);
    return 1;
  }
  std::printf("all suites passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"naum: alternating-update solvers for penalized matrix factorization"};
  app.require_subcommand(1);

  SolveFlags nmf_flags;
  CLI::App* nmf = app.add_subcommand("nmf", "nonnegative factorization solve");
  add_common_flags(nmf, nmf_flags);

  SolveFlags mc_flags;
  CLI::App* mc = app.add_subcommand("mc", "matrix completion solve");
  add_common_flags(mc, mc_flags);
  mc->add_option("--eta", mc_flags.eta, "nuclear-norm weight")->required();
  mc->add_option("--sr", mc_flags.sr, "sampling ratio for dense inputs")
      ->check(CLI::Range(0.0, 1.0));

  std::string config_path, bench_out;
  std::size_t jobs = 1;
  CLI::App* bench = app.add_subcommand("bench", "run a trial grid from a JSON config");
  bench->add_option("config", config_path, "config JSON path")->required();
  bench->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "report path (overrides the config)");

  CLI::App* verify = app.add_subcommand("verify", "run the self-check suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (nmf->parsed()) return run_nmf(nmf_flags);
    if (mc->parsed()) return run_mc(mc_flags);
    if (bench->parsed()) return run_bench(config_path, jobs, bench_out);
    if (verify->parsed()) return run_verify();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
