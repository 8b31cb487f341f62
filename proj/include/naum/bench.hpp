#ifndef NAUM_BENCH_HPP
#define NAUM_BENCH_HPP

// Trial orchestration: shared random starting points, objective evolution
// curves, error metrics, config parsing and JSON report emission.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dense_matrix.hpp"
#include "engine.hpp"
#include "io.hpp"
#include "mc.hpp"
#include "nmf.hpp"
#include "rng.hpp"

namespace naum {

// Per-seed stream layout: 0 sampling masks, 1 X0, 2 Y0, 3/4 planted factors,
// 5 additive noise. Keeping the layout fixed makes every artifact a pure
// function of the seed alone.

inline DenseMatrix randn_matrix(std::size_t rows, std::size_t cols, CounterRng rng) {
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = rng.normal();
  return out;
}

struct InitPair {
  DenseMatrix x, y;
};

// Nonnegative start: randn with negative entries zeroed, each factor then
// scaled to Frobenius norm sqrt(|M|_F). A factor that truncates to all
// zeros (vanishing probability) triggers a resample with seed+1.
inline InitPair init_nmf(std::size_t m, std::size_t n, std::size_t r,
                         const MatrixData& data, std::uint64_t seed) {
  if (m == 0 || n == 0 || r == 0)
    throw InvalidDimensions("init_nmf: dimensions must be positive");
  const double target = std::sqrt(std::sqrt(data_frob_sq(data)));
  for (;; ++seed) {
    CounterRng root(seed);
    DenseMatrix x = randn_matrix(m, r, root.split(1));
    DenseMatrix y = randn_matrix(n, r, root.split(2));
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = std::max(0.0, x.data()[i]);
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = std::max(0.0, y.data()[i]);
    const double fx = frob(x), fy = frob(y);
    if (fx == 0.0 || fy == 0.0) continue;
    InitPair out{(target / fx) * x, (target / fy) * y};
    return out;
  }
}

// Free start for completion problems: plain standard normal entries.
inline InitPair init_mc(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed) {
  if (m == 0 || n == 0 || r == 0)
    throw InvalidDimensions("init_mc: dimensions must be positive");
  CounterRng root(seed);
  return {randn_matrix(m, r, root.split(1)), randn_matrix(n, r, root.split(2))};
}

// ---------------------------------------------------------------------------
// Evolution curves E(t): running minimum of the normalized objective gap.

struct CurveSeries {
  std::vector<double> f;  // objective values, f[0] at the starting point
  std::vector<double> t;  // nondecreasing wall-clock stamps, t[0] = 0
};

inline CurveSeries trace_series(const Trace& tr) {
  CurveSeries s;
  s.f.reserve(tr.records.size() + 1);
  s.t.reserve(tr.records.size() + 1);
  s.f.push_back(tr.initial_objective);
  s.t.push_back(0.0);
  for (const IterRecord& rec : tr.records) {
    s.f.push_back(rec.objective);
    s.t.push_back(rec.seconds);
  }
  return s;
}

inline std::vector<double> uniform_grid(double t_max, std::size_t points = 200) {
  if (points < 2) throw InvalidParameter("uniform_grid: need at least two points");
  if (!std::isfinite(t_max) || !(t_max >= 0.0))
    throw InvalidParameter("uniform_grid: t_max must be finite and nonnegative");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = t_max * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

// E(t) = min{ e(k) : t(k) <= t } with e(k) = (f(k) - fmin) / (f(0) - fmin),
// sampled on a nondecreasing grid. Grid points before t(0) evaluate to 1;
// a degenerate series (f(0) == fmin) yields the all-zero curve.
inline std::vector<double> evolution_on_grid(const CurveSeries& s, double fmin,
                                             const std::vector<double>& grid) {
  if (s.f.empty() || s.f.size() != s.t.size())
    throw InvalidData("evolution_on_grid: empty or ragged series");
  const double denom = s.f.front() - fmin;
  if (!(denom > 0.0)) return std::vector<double>(grid.size(), 0.0);
  std::vector<double> out(grid.size(), 1.0);
  double best = 1.0;
  std::size_t k = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (k < s.f.size() && s.t[k] <= grid[g]) {
      best = std::min(best, (s.f[k] - fmin) / denom);
      ++k;
    }
    out[g] = best;
  }
  return out;
}

struct TraceSample {
  std::string algorithm;
  std::uint64_t seed = 0;
  CurveSeries series;
};

struct EvolutionResult {
  std::vector<double> t_grid;
  std::vector<std::string> algorithms;      // first-appearance order
  std::vector<std::vector<double>> curves;  // per algorithm, pointwise mean over seeds
  std::vector<std::string> warnings;
};

// Normalizes every trace against the best objective seen anywhere in the
// group and averages the per-seed curves pointwise for each algorithm.
inline EvolutionResult evolution_curve(const std::vector<TraceSample>& traces,
                                       const std::vector<double>& t_grid) {
  EvolutionResult out;
  out.t_grid = t_grid;
  if (traces.empty()) return out;
  double fmin = std::numeric_limits<double>::infinity();
  for (const TraceSample& tr : traces) {
    if (tr.series.f.empty()) throw InvalidData("evolution_curve: empty trace");
    for (double v : tr.series.f) fmin = std::min(fmin, v);
  }
  std::vector<std::size_t> counts;
  for (const TraceSample& tr : traces) {
    const auto pos = std::find(out.algorithms.begin(), out.algorithms.end(), tr.algorithm);
    std::size_t idx;
    if (pos == out.algorithms.end()) {
      idx = out.algorithms.size();
      out.algorithms.push_back(tr.algorithm);
      out.curves.emplace_back(t_grid.size(), 0.0);
      counts.push_back(0);
    } else {
      idx = static_cast<std::size_t>(pos - out.algorithms.begin());
    }
    if (!(tr.series.f.front() - fmin > 0.0))
      out.warnings.push_back("degenerate trace for " + tr.algorithm + " seed " +
                             std::to_string(tr.seed) +
                             " (initial objective equals the group minimum); curve is zero");
    const std::vector<double> e = evolution_on_grid(tr.series, fmin, t_grid);
    for (std::size_t g = 0; g < e.size(); ++g) out.curves[idx][g] += e[g];
    ++counts[idx];
  }
  for (std::size_t a = 0; a < out.curves.size(); ++a)
    for (double& v : out.curves[a]) v /= static_cast<double>(counts[a]);
  return out;
}

// ---------------------------------------------------------------------------
// Error metrics.

// |X Y^T - M|_F / |M|_F against dense ground truth.
inline double relative_error(const DenseMatrix& x, const DenseMatrix& y,
                             const DenseMatrix& m) {
  if (x.rows() != m.rows() || y.rows() != m.cols() || x.cols() != y.cols())
    throw InvalidDimensions("relative_error: factor shapes disagree with data");
  const double m2 = frob_sq(m);
  if (m2 == 0.0) throw InvalidData("relative_error: |M|_F is zero");
  return frob(matmul_a_bt(x, y) - m) / std::sqrt(m2);
}

// Sparse data never materializes X Y^T; the squared norm is expanded through
// Gram identities and clamped at zero against cancellation.
inline double relative_error(const DenseMatrix& x, const DenseMatrix& y,
                             const MatrixData& data) {
  if (std::holds_alternative<DenseMatrix>(data))
    return relative_error(x, y, std::get<DenseMatrix>(data));
  if (x.rows() != data_rows(data) || y.rows() != data_cols(data) || x.cols() != y.cols())
    throw InvalidDimensions("relative_error: factor shapes disagree with data");
  const double m2 = data_frob_sq(data);
  if (m2 == 0.0) throw InvalidData("relative_error: |M|_F is zero");
  const double p2 = trace_of_product(gram(x), gram(y));
  const double cross = dot(x, data_matmul(data, y));
  return std::sqrt(std::max(0.0, p2 - 2.0 * cross + m2)) / std::sqrt(m2);
}

// Relative misfit on the observed entries only.
inline double mc_observed_relerr(const McProblem& prob, const DenseMatrix& x,
                                 const DenseMatrix& y) {
  double b2 = 0.0;
  for (double v : prob.observed) b2 += v * v;
  if (b2 == 0.0) throw InvalidData("mc_observed_relerr: observed entries are all zero");
  const std::vector<double> r = mc_residual(prob, x, y);
  double r2 = 0.0;
  for (double v : r) r2 += v * v;
  return std::sqrt(r2 / b2);
}

// Min-max normalization of final objectives within one trial group; a
// single-entry or tied group maps to all zeros.
inline std::vector<double> normalized_fvals(const std::vector<double>& finals) {
  std::vector<double> out(finals.size(), 0.0);
  if (finals.empty()) return out;
  const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
  const double denom = *hi - *lo;
  if (!(denom > 0.0)) return out;
  for (std::size_t i = 0; i < finals.size(); ++i) out[i] = (finals[i] - *lo) / denom;
  return out;
}

// ---------------------------------------------------------------------------
// Trial configuration.

enum class ProblemKind { Nmf, Mc };

struct SyntheticSpec {
  std::size_t m = 0, n = 0, rank = 0;
  double noise = 0.0;  // additive noise level relative to |M|_F
};

struct ProblemDescriptor {
  ProblemKind kind = ProblemKind::Nmf;
  std::string input;  // data file; empty when synthetic
  MatrixFormat format = MatrixFormat::DenseCsv;
  std::optional<SyntheticSpec> synthetic;
  std::size_t rank = 0;           // factorization rank
  double eta = 0.0;               // completion regularization weight
  double sr = 1.0;                // completion sampling ratio
  std::optional<double> x_max;    // factorization upper bound on factor entries
};

struct AlgorithmSpec {
  std::string name;    // unique report label; doubles as the trace file stem
  std::string method;  // naum | hals | palm
  double alpha = 0.0;  // naum only; 0 picks the per-problem default
  std::optional<Scheme> scheme_x, scheme_y;  // naum only
};

struct TrialConfig {
  ProblemDescriptor problem;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::uint64_t> seeds;
  std::size_t max_iters = 500;
  double max_seconds = 0.0;  // 0 = no wall-clock cap
  double tol_obj = 1e-4;
  double tol_change = 1e-4;
  bool use_stopping_rules = true;
  std::size_t t_grid_points = 200;
  std::string output;     // report path; empty leaves emission to the caller
  std::string trace_dir;  // per-trial CSV directory; empty skips trace files

  void validate() const {
    if (algorithms.empty()) throw InvalidConfig("config: empty algorithm list");
    if (seeds.empty()) throw InvalidConfig("config: empty seed list");
    if (problem.rank == 0) throw InvalidConfig("config: problem.rank must be positive");
    if (problem.input.empty() == !problem.synthetic.has_value())
      throw InvalidConfig("config: problem needs exactly one of input or synthetic");
    if (problem.synthetic) {
      const SyntheticSpec& s = *problem.synthetic;
      if (s.m == 0 || s.n == 0 || s.rank == 0)
        throw InvalidConfig("config: synthetic dimensions must be positive");
      if (!std::isfinite(s.noise) || s.noise < 0.0)
        throw InvalidConfig("config: synthetic.noise must be finite and nonnegative");
    }
    if (problem.kind == ProblemKind::Mc) {
      if (!std::isfinite(problem.eta) || problem.eta < 0.0)
        throw InvalidConfig("config: eta must be finite and nonnegative");
      if (!(problem.sr > 0.0 && problem.sr <= 1.0))
        throw InvalidConfig("config: sr must lie in (0, 1]");
    }
    if (problem.x_max && !(*problem.x_max > 0.0))
      throw InvalidConfig("config: x_max must be positive");
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
      const AlgorithmSpec& a = algorithms[i];
      if (a.name.empty()) throw InvalidConfig("config: algorithm name must be nonempty");
      for (std::size_t j = 0; j < i; ++j)
        if (algorithms[j].name == a.name)
          throw InvalidConfig("config: duplicate algorithm name '" + a.name + "'");
      const bool is_nmf = problem.kind == ProblemKind::Nmf;
      if (a.method == "naum") {
        if (a.alpha != 0.0 && (!std::isfinite(a.alpha) || a.alpha == 1.0))
          throw InvalidConfig("config: alpha must be finite and not 0 or 1");
      } else if (a.method == "hals") {
        if (!is_nmf) throw InvalidConfig("config: hals applies to nmf problems only");
      } else if (a.method == "palm") {
        if (is_nmf) throw InvalidConfig("config: palm applies to mc problems only");
      } else {
        throw InvalidConfig("config: unknown method '" + a.method + "'");
      }
    }
    if (max_iters == 0) throw InvalidConfig("config: max_iters must be positive");
    if (!std::isfinite(max_seconds) || max_seconds < 0.0)
      throw InvalidConfig("config: max_seconds must be finite and nonnegative");
    if (!(tol_obj > 0.0) || !(tol_change > 0.0))
      throw InvalidConfig("config: tolerances must be positive");
    if (t_grid_points < 2) throw InvalidConfig("config: t_grid_points must be at least 2");
  }
};

namespace detail {

inline const nlohmann::json& cfg_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw InvalidConfig(std::string("config: missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T cfg_get(const nlohmann::json& j, const char* key) {
  try {
    return cfg_at(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidConfig(std::string("config: field '") + key + "' has the wrong type");
  }
}

template <class T>
T cfg_get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidConfig(std::string("config: field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline TrialConfig parse_trial_config(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("config: top level must be a JSON object");
  TrialConfig cfg;
  const nlohmann::json& prob = detail::cfg_at(j, "problem");
  if (!prob.is_object()) throw InvalidConfig("config: 'problem' must be an object");
  const std::string kind = detail::cfg_get<std::string>(prob, "kind");
  if (kind == "nmf")
    cfg.problem.kind = ProblemKind::Nmf;
  else if (kind == "mc")
    cfg.problem.kind = ProblemKind::Mc;
  else
    throw InvalidConfig("config: problem.kind must be 'nmf' or 'mc'");
  cfg.problem.rank = detail::cfg_get<std::size_t>(prob, "rank");
  cfg.problem.input = detail::cfg_get_or<std::string>(prob, "input", "");
  if (prob.contains("format") && !prob.at("format").is_null()) {
    try {
      cfg.problem.format = parse_format(detail::cfg_get<std::string>(prob, "format"));
    } catch (const InvalidParameter& e) {
      throw InvalidConfig(std::string("config: ") + e.what());
    }
  }
  if (prob.contains("synthetic") && !prob.at("synthetic").is_null()) {
    const nlohmann::json& syn = prob.at("synthetic");
    if (!syn.is_object()) throw InvalidConfig("config: 'synthetic' must be an object");
    SyntheticSpec s;
    s.m = detail::cfg_get<std::size_t>(syn, "m");
    s.n = detail::cfg_get<std::size_t>(syn, "n");
    s.rank = detail::cfg_get<std::size_t>(syn, "rank");
    s.noise = detail::cfg_get_or<double>(syn, "noise", 0.0);
    cfg.problem.synthetic = s;
  }
  cfg.problem.eta = detail::cfg_get_or<double>(prob, "eta", 0.0);
  cfg.problem.sr = detail::cfg_get_or<double>(prob, "sr", 1.0);
  if (prob.contains("x_max") && !prob.at("x_max").is_null())
    cfg.problem.x_max = detail::cfg_get<double>(prob, "x_max");

  const nlohmann::json& algs = detail::cfg_at(j, "algorithms");
  if (!algs.is_array()) throw InvalidConfig("config: 'algorithms' must be an array");
  for (const nlohmann::json& a : algs) {
    if (!a.is_object()) throw InvalidConfig("config: algorithm entries must be objects");
    AlgorithmSpec spec;
    spec.method = detail::cfg_get<std::string>(a, "method");
    spec.alpha = detail::cfg_get_or<double>(a, "alpha", 0.0);
    if (a.contains("scheme_x") && !a.at("scheme_x").is_null()) {
      try {
        spec.scheme_x = parse_scheme(detail::cfg_get<std::string>(a, "scheme_x"));
      } catch (const InvalidParameter& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
      }
    }
    if (a.contains("scheme_y") && !a.at("scheme_y").is_null()) {
      try {
        spec.scheme_y = parse_scheme(detail::cfg_get<std::string>(a, "scheme_y"));
      } catch (const InvalidParameter& e) {
        throw InvalidConfig(std::string("config: ") + e.what());
      }
    }
    spec.name = detail::cfg_get_or<std::string>(a, "name", "");
    if (spec.name.empty()) {
      spec.name = spec.method;
      if (spec.method == "naum" && spec.alpha != 0.0)
        spec.name += "-a" + nlohmann::json(spec.alpha).dump();
    }
    cfg.algorithms.push_back(std::move(spec));
  }

  cfg.seeds = detail::cfg_get<std::vector<std::uint64_t>>(j, "seeds");
  cfg.max_iters = detail::cfg_get_or<std::size_t>(j, "max_iters", cfg.max_iters);
  cfg.max_seconds = detail::cfg_get_or<double>(j, "max_seconds", cfg.max_seconds);
  cfg.tol_obj = detail::cfg_get_or<double>(j, "tol_obj", cfg.tol_obj);
  cfg.tol_change = detail::cfg_get_or<double>(j, "tol_change", cfg.tol_change);
  cfg.use_stopping_rules =
      detail::cfg_get_or<bool>(j, "use_stopping_rules", cfg.use_stopping_rules);
  cfg.t_grid_points = detail::cfg_get_or<std::size_t>(j, "t_grid_points", cfg.t_grid_points);
  cfg.output = detail::cfg_get_or<std::string>(j, "output", "");
  cfg.trace_dir = detail::cfg_get_or<std::string>(j, "trace_dir", "");
  cfg.validate();
  return cfg;
}

inline nlohmann::json trial_config_to_json(const TrialConfig& cfg) {
  nlohmann::json prob;
  prob["kind"] = cfg.problem.kind == ProblemKind::Nmf ? "nmf" : "mc";
  prob["rank"] = cfg.problem.rank;
  if (!cfg.problem.input.empty()) {
    prob["input"] = cfg.problem.input;
    prob["format"] = cfg.problem.format == MatrixFormat::DenseCsv      ? "dense-csv"
                     : cfg.problem.format == MatrixFormat::DenseBinary ? "dense-binary"
                                                                       : "sparse-coordinate";
  }
  if (cfg.problem.synthetic) {
    const SyntheticSpec& s = *cfg.problem.synthetic;
    prob["synthetic"] = {{"m", s.m}, {"n", s.n}, {"rank", s.rank}, {"noise", s.noise}};
  }
  if (cfg.problem.kind == ProblemKind::Mc) {
    prob["eta"] = cfg.problem.eta;
    prob["sr"] = cfg.problem.sr;
  }
  if (cfg.problem.x_max) prob["x_max"] = *cfg.problem.x_max;

  nlohmann::json algs = nlohmann::json::array();
  for (const AlgorithmSpec& a : cfg.algorithms) {
    nlohmann::json ja;
    ja["name"] = a.name;
    ja["method"] = a.method;
    if (a.method == "naum") {
      if (a.alpha != 0.0) ja["alpha"] = a.alpha;
      if (a.scheme_x) ja["scheme_x"] = to_string(*a.scheme_x);
      if (a.scheme_y) ja["scheme_y"] = to_string(*a.scheme_y);
    }
    algs.push_back(std::move(ja));
  }

  return nlohmann::json{{"problem", std::move(prob)},
                        {"algorithms", std::move(algs)},
                        {"seeds", cfg.seeds},
                        {"max_iters", cfg.max_iters},
                        {"max_seconds", cfg.max_seconds},
                        {"tol_obj", cfg.tol_obj},
                        {"tol_change", cfg.tol_change},
                        {"use_stopping_rules", cfg.use_stopping_rules},
                        {"t_grid_points", cfg.t_grid_points},
                        {"output", cfg.output},
                        {"trace_dir", cfg.trace_dir}};
}

// ---------------------------------------------------------------------------
// Trial execution and report assembly.

struct TrialOutcome {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double seconds = 0.0;
  double objective = 0.0;
  double relerr = std::numeric_limits<double>::quiet_NaN();
  double recerr = std::numeric_limits<double>::quiet_NaN();
  double normalized_fval = std::numeric_limits<double>::quiet_NaN();
  std::string stop_reason;
  std::string trace_file;
  Trace trace;
};

struct AlgorithmAggregate {
  std::string algorithm;
  std::size_t trials = 0;
  double mean_iterations = 0.0;
  double mean_seconds = 0.0;
  double mean_objective = 0.0;
  double mean_relerr = 0.0;
  double mean_recerr = 0.0;
  double mean_normalized_fval = 0.0;
};

struct Report {
  TrialConfig config;
  std::vector<TrialOutcome> trials;
  std::vector<AlgorithmAggregate> aggregates;
  EvolutionResult evolution;
};

// Recomputes everything downstream of the stored traces: per-trial scalars,
// normalized objective values per seed group, per-algorithm means and the
// evolution curves. Running it twice on the same trials is a no-op, which is
// what makes stored reports reproducible from their trace files.
inline void aggregate_trials(Report& rep) {
  for (TrialOutcome& tr : rep.trials) {
    tr.iterations = tr.trace.records.size();
    tr.seconds = tr.trace.records.empty() ? 0.0 : tr.trace.records.back().seconds;
    tr.objective = tr.trace.records.empty() ? tr.trace.initial_objective
                                            : tr.trace.records.back().objective;
  }

  // Normalized objective values within each seed group.
  std::vector<std::uint64_t> seen_seeds;
  for (const TrialOutcome& tr : rep.trials)
    if (std::find(seen_seeds.begin(), seen_seeds.end(), tr.seed) == seen_seeds.end())
      seen_seeds.push_back(tr.seed);
  for (std::uint64_t seed : seen_seeds) {
    std::vector<std::size_t> members;
    std::vector<double> finals;
    for (std::size_t i = 0; i < rep.trials.size(); ++i)
      if (rep.trials[i].seed == seed) {
        members.push_back(i);
        finals.push_back(rep.trials[i].objective);
      }
    const std::vector<double> nf = normalized_fvals(finals);
    for (std::size_t i = 0; i < members.size(); ++i)
      rep.trials[members[i]].normalized_fval = nf[i];
  }

  // Per-algorithm means in first-appearance order.
  rep.aggregates.clear();
  for (const TrialOutcome& tr : rep.trials) {
    AlgorithmAggregate* agg = nullptr;
    for (AlgorithmAggregate& a : rep.aggregates)
      if (a.algorithm == tr.algorithm) agg = &a;
    if (!agg) {
      rep.aggregates.push_back({});
      agg = &rep.aggregates.back();
      agg->algorithm = tr.algorithm;
    }
    ++agg->trials;
    agg->mean_iterations += static_cast<double>(tr.iterations);
    agg->mean_seconds += tr.seconds;
    agg->mean_objective += tr.objective;
    agg->mean_relerr += tr.relerr;
    agg->mean_recerr += tr.recerr;
    agg->mean_normalized_fval += tr.normalized_fval;
  }
  for (AlgorithmAggregate& a : rep.aggregates) {
    const double n = static_cast<double>(a.trials);
    a.mean_iterations /= n;
    a.mean_seconds /= n;
    a.mean_objective /= n;
    a.mean_relerr /= n;
    a.mean_recerr /= n;
    a.mean_normalized_fval /= n;
  }

  // Evolution curves on [0, horizon].
  double horizon = rep.config.max_seconds;
  if (!(horizon > 0.0)) {
    horizon = 0.0;
    for (const TrialOutcome& tr : rep.trials) horizon = std::max(horizon, tr.seconds);
    if (!(horizon > 0.0)) horizon = 1.0;
  }
  std::vector<TraceSample> samples;
  samples.reserve(rep.trials.size());
  for (const TrialOutcome& tr : rep.trials)
    samples.push_back({tr.algorithm, tr.seed, trace_series(tr.trace)});
  rep.evolution = evolution_curve(samples, uniform_grid(horizon, rep.config.t_grid_points));
}

namespace detail {

struct PreparedSeed {
  std::optional<NmfProblem> nmf;
  std::optional<McProblem> mc;
  DenseMatrix truth;  // dense ground truth for recovery error; empty if unknown
  DenseMatrix x0, y0;
};

inline DenseMatrix abs_randn(std::size_t rows, std::size_t cols, CounterRng rng) {
  DenseMatrix out = randn_matrix(rows, cols, std::move(rng));
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::abs(out.data()[i]);
  return out;
}

inline PreparedSeed prepare_seed(const TrialConfig& cfg, const LoadedMatrix* loaded,
                                 std::uint64_t seed) {
  const ProblemDescriptor& pd = cfg.problem;
  PreparedSeed out;
  CounterRng root(seed);
  if (pd.kind == ProblemKind::Nmf) {
    NmfProblem prob;
    if (loaded) {
      if (loaded->dense)
        prob.data = *loaded->dense;
      else
        prob.data = *loaded->sparse;
    } else {
      const SyntheticSpec& s = *pd.synthetic;
      const DenseMatrix px = abs_randn(s.m, s.rank, root.split(3));
      const DenseMatrix py = abs_randn(s.n, s.rank, root.split(4));
      DenseMatrix m0 = matmul_a_bt(px, py);
      if (s.noise > 0.0) {
        const DenseMatrix e = randn_matrix(s.m, s.n, root.split(5));
        const double scale = s.noise * frob(m0) / std::max(frob(e), 1e-300);
        for (std::size_t i = 0; i < m0.size(); ++i)
          m0.data()[i] = std::max(0.0, m0.data()[i] + scale * e.data()[i]);
      }
      prob.data = std::move(m0);
    }
    prob.r = pd.rank;
    if (pd.x_max) prob.x_max = prob.y_max = *pd.x_max;
    InitPair init = init_nmf(prob.rows(), prob.cols(), prob.r, prob.data, seed);
    out.x0 = std::move(init.x);
    out.y0 = std::move(init.y);
    out.nmf = std::move(prob);
    return out;
  }

  McProblem prob;
  prob.r = pd.rank;
  prob.eta = pd.eta;
  if (loaded && loaded->sparse) {
    const SparseMatrix& sp = *loaded->sparse;
    prob.m = sp.rows();
    prob.n = sp.cols();
    SamplingPattern pat;
    pat.m = sp.rows();
    pat.n = sp.cols();
    for (std::size_t i = 0; i < sp.rows(); ++i)
      for (std::size_t idx = sp.row_ptr()[i]; idx < sp.row_ptr()[i + 1]; ++idx)
        pat.entries.emplace_back(static_cast<std::uint32_t>(i), sp.col_index()[idx]);
    prob.observed.assign(sp.values().begin(), sp.values().end());
    prob.omega = std::move(pat);
  } else {
    if (loaded) {
      out.truth = *loaded->dense;
    } else {
      const SyntheticSpec& s = *pd.synthetic;
      out.truth = matmul_a_bt(randn_matrix(s.m, s.rank, root.split(3)),
                              randn_matrix(s.n, s.rank, root.split(4)));
    }
    prob.m = out.truth.rows();
    prob.n = out.truth.cols();
    prob.omega = sample_mask(prob.m, prob.n, pd.sr, seed);
    prob.observed.reserve(prob.omega.count());
    for (const auto& [i, j] : prob.omega.entries) prob.observed.push_back(out.truth(i, j));
  }
  InitPair init = init_mc(prob.m, prob.n, prob.r, seed);
  out.x0 = std::move(init.x);
  out.y0 = std::move(init.y);
  out.mc = std::move(prob);
  return out;
}

inline std::string file_token(const std::string& name) {
  std::string out = name;
  for (char& ch : out) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (!std::isalnum(u) && ch != '.' && ch != '-' && ch != '_') ch = '_';
  }
  return out;
}

}  // namespace detail

inline TrialOutcome run_trial(const TrialConfig& cfg, const AlgorithmSpec& alg,
                              const detail::PreparedSeed& prep, std::uint64_t seed) {
  SolveOptions opt;
  opt.max_iters = cfg.max_iters;
  opt.max_seconds =
      cfg.max_seconds > 0.0 ? cfg.max_seconds : std::numeric_limits<double>::infinity();
  opt.tol_obj = cfg.tol_obj;
  opt.tol_change = cfg.tol_change;
  opt.use_stopping_rules = cfg.use_stopping_rules;

  TrialOutcome out;
  out.algorithm = alg.name;
  out.seed = seed;
  SolveResult res;
  if (prep.nmf) {
    const NmfProblem& prob = *prep.nmf;
    if (alg.method == "naum") {
      SolverParams params = derive_params(alg.alpha != 0.0 ? alg.alpha : 0.6);
      params.scheme_x = alg.scheme_x.value_or(Scheme::HierarchicalProx);
      params.scheme_y = alg.scheme_y.value_or(Scheme::HierarchicalProx);
      res = nmf_solve(prob, params, prep.x0, prep.y0, opt);
    } else {
      res = hals_solve(prob, prep.x0, prep.y0, opt);
    }
    out.relerr = relative_error(res.x, res.y, prob.data);
  } else {
    const McProblem& prob = *prep.mc;
    if (alg.method == "naum") {
      SolverParams params = derive_params(alg.alpha != 0.0 ? alg.alpha : 0.4);
      params.scheme_x = alg.scheme_x.value_or(Scheme::ProxLinear);
      params.scheme_y = alg.scheme_y.value_or(Scheme::ProxLinear);
      res = mc_solve(prob, params, prep.x0, prep.y0, opt);
    } else {
      res = palm_solve(prob, prep.x0, prep.y0, opt);
    }
    out.relerr = mc_observed_relerr(prob, res.x, res.y);
    if (prep.truth.size() > 0) out.recerr = relative_error(res.x, res.y, prep.truth);
  }
  out.stop_reason = to_string(res.trace.reason);
  out.trace = std::move(res.trace);
  return out;
}

// Runs every configured algorithm from one shared starting point per seed;
// trials may execute on `jobs` threads, report assembly stays serialized.
inline Report run_trials(const TrialConfig& cfg, std::size_t jobs = 1) {
  cfg.validate();
  std::optional<LoadedMatrix> loaded;
  if (!cfg.problem.input.empty()) {
    loaded = load_matrix(cfg.problem.input, cfg.problem.format);
    if (cfg.problem.kind == ProblemKind::Nmf && loaded->sparse &&
        loaded->sparse->min_value() < 0.0)
      throw InvalidData("config: factorization data must be nonnegative");
  }

  std::vector<detail::PreparedSeed> prepared;
  prepared.reserve(cfg.seeds.size());
  for (std::uint64_t seed : cfg.seeds)
    prepared.push_back(detail::prepare_seed(cfg, loaded ? &*loaded : nullptr, seed));

  Report rep;
  rep.config = cfg;
  const std::size_t total = cfg.seeds.size() * cfg.algorithms.size();
  rep.trials.resize(total);
  std::vector<std::exception_ptr> failures(total);
  auto run_one = [&](std::size_t idx) {
    const std::size_t s = idx / cfg.algorithms.size();
    const std::size_t a = idx % cfg.algorithms.size();
    try {
      rep.trials[idx] = run_trial(cfg, cfg.algorithms[a], prepared[s], cfg.seeds[s]);
    } catch (...) {
      failures[idx] = std::current_exception();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, total));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= total) return;
          run_one(i);
        }
      });
    for (std::thread& th : pool) th.join();
  }
  for (std::size_t i = 0; i < total; ++i) {
    if (!failures[i]) continue;
    const std::size_t s = i / cfg.algorithms.size();
    const std::size_t a = i % cfg.algorithms.size();
    std::string what = "unknown error";
    try {
      std::rethrow_exception(failures[i]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw TrialFailure("trial algorithm=" + cfg.algorithms[a].name + " seed=" +
                       std::to_string(cfg.seeds[s]) + ": " + what);
  }

  if (!cfg.trace_dir.empty()) {
    std::filesystem::create_directories(cfg.trace_dir);
    for (TrialOutcome& tr : rep.trials) {
      const std::string path = cfg.trace_dir + "/" + detail::file_token(tr.algorithm) +
                               "-seed" + std::to_string(tr.seed) + ".csv";
      write_trace_csv(path, tr.trace);
      tr.trace_file = path;
    }
  }

  aggregate_trials(rep);
  return rep;
}

inline nlohmann::json report_to_json(const Report& rep) {
  nlohmann::json out;
  out["config"] = trial_config_to_json(rep.config);
  out["trials"] = nlohmann::json::array();
  for (const TrialOutcome& tr : rep.trials) {
    nlohmann::json jt{{"algorithm", tr.algorithm},
                      {"seed", tr.seed},
                      {"iterations", tr.iterations},
                      {"seconds", tr.seconds},
                      {"objective", tr.objective},
                      {"relerr", tr.relerr},
                      {"recerr", tr.recerr},
                      {"normalized_fval", tr.normalized_fval},
                      {"stop_reason", tr.stop_reason}};
    if (!tr.trace_file.empty()) jt["trace"] = tr.trace_file;
    out["trials"].push_back(std::move(jt));
  }
  out["aggregates"] = nlohmann::json::array();
  for (const AlgorithmAggregate& a : rep.aggregates)
    out["aggregates"].push_back({{"algorithm", a.algorithm},
                                 {"trials", a.trials},
                                 {"mean_iterations", a.mean_iterations},
                                 {"mean_seconds", a.mean_seconds},
                                 {"mean_objective", a.mean_objective},
                                 {"mean_relerr", a.mean_relerr},
                                 {"mean_recerr", a.mean_recerr},
                                 {"mean_normalized_fval", a.mean_normalized_fval}});
  out["evolution"]["t_grid"] = rep.evolution.t_grid;
  out["evolution"]["curves"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.evolution.algorithms.size(); ++i)
    out["evolution"]["curves"].push_back(
        {{"algorithm", rep.evolution.algorithms[i]}, {"e", rep.evolution.curves[i]}});
  out["warnings"] = rep.evolution.warnings;
  return out;
}

inline void write_report(const std::string& path, const Report& rep) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError(path + ": cannot open for writing");
  f << report_to_json(rep).dump(2) << '\n';
  if (!f) throw ParseError(path + ": write failed");
}

}  // namespace naum

#endif
