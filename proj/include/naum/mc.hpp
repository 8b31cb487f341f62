#ifndef NAUM_MC_HPP
#define NAUM_MC_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "dense_matrix.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "linear_map.hpp"
#include "params.hpp"
#include "problem.hpp"
#include "rng.hpp"
#include "svd.hpp"

namespace naum {

// Nuclear-norm regularized completion from partial observations:
//   minimize eta/2 |X|_* + eta/2 |Y|_* + 1/2 |P_omega(X Y^T) - b|^2
struct McProblem {
  std::size_t m = 0, n = 0, r = 0;
  SamplingPattern omega;
  std::vector<double> observed;  // values at omega's positions
  double eta = 0.0;

  void validate() const {
    if (m == 0 || n == 0 || r == 0)
      throw InvalidDimensions("mc: dimensions must be positive");
    if (omega.m != m || omega.n != n)
      throw InvalidDimensions("mc: pattern shape disagrees with m x n");
    omega.validate();
    if (observed.size() != omega.count())
      throw InvalidDimensions("mc: observed values disagree with pattern size");
    for (double v : observed)
      if (!std::isfinite(v)) throw NonFiniteInput("mc: non-finite observed value");
    if (!(eta >= 0.0)) throw InvalidParameter("mc: eta must be >= 0");
  }
};

inline ProblemSpec mc_problem_spec(const McProblem& prob) {
  prob.validate();
  ProblemSpec spec;
  spec.m = prob.m;
  spec.n = prob.n;
  spec.r = prob.r;
  spec.psi = ProxOracle::scaled_nuclear(prob.eta / 2.0);
  spec.phi = ProxOracle::scaled_nuclear(prob.eta / 2.0);
  spec.map = LinearMap::sampling(prob.omega);
  spec.b = prob.observed;
  return spec;
}

// (X Y^T - M) restricted to the observed positions.
inline std::vector<double> mc_residual(const McProblem& prob, const DenseMatrix& x,
                                       const DenseMatrix& y) {
  std::vector<double> res(prob.omega.count());
  for (std::size_t t = 0; t < res.size(); ++t) {
    const auto& e = prob.omega.entries[t];
    const double* xi = x.row(e.first);
    const double* yj = y.row(e.second);
    double s = 0.0;
    for (std::size_t l = 0; l < x.cols(); ++l) s += xi[l] * yj[l];
    res[t] = s - prob.observed[t];
  }
  return res;
}

// R * Y where R is the residual scattered onto the pattern (kept implicit).
inline DenseMatrix mc_scatter_mul(const SamplingPattern& omega,
                                  const std::vector<double>& resid,
                                  const DenseMatrix& y, std::size_t m) {
  DenseMatrix out(m, y.cols());
  for (std::size_t t = 0; t < resid.size(); ++t) {
    const auto& e = omega.entries[t];
    const double v = resid[t];
    double* oi = out.row(e.first);
    const double* yj = y.row(e.second);
    for (std::size_t l = 0; l < y.cols(); ++l) oi[l] += v * yj[l];
  }
  return out;
}

// R^T * U
inline DenseMatrix mc_scatter_tmul(const SamplingPattern& omega,
                                   const std::vector<double>& resid,
                                   const DenseMatrix& u, std::size_t n) {
  DenseMatrix out(n, u.cols());
  for (std::size_t t = 0; t < resid.size(); ++t) {
    const auto& e = omega.entries[t];
    const double v = resid[t];
    double* oj = out.row(e.second);
    const double* ui = u.row(e.first);
    for (std::size_t l = 0; l < u.cols(); ++l) oj[l] += v * ui[l];
  }
  return out;
}

// X update: U = S_{eta/(2 mu)}(X - (1/mu) R Y), R the residual at (X, Y).
// The 1/mu coefficient is alpha*beta/(alpha+beta)/mu, which the parameter
// coupling 1/alpha + 1/beta = 1 collapses to 1/mu.
inline ShrinkResult mc_step_x(const McProblem& prob, const DenseMatrix& x,
                              const DenseMatrix& ry, double mu) {
  DenseMatrix w = x;
  const double inv = 1.0 / mu;
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= inv * ry.data()[i];
  return shrink_singular_full(w, prob.eta / (2.0 * mu));
}

// Y update at the fresh U:
//   V = S_{eta/(2 sigma)}(Y - (alpha/sigma) Y (U - X)^T U - (1/sigma) R^T U).
// The middle term is the Gram correction from linearizing at (U, Y) rather
// than (X, Y); dropping it breaks the descent guarantee.
inline ShrinkResult mc_step_y(const McProblem& prob, const SolverParams& p,
                              const DenseMatrix& x, const DenseMatrix& y,
                              const DenseMatrix& u, const DenseMatrix& rtu,
                              double sigma) {
  const DenseMatrix du = u - x;
  const DenseMatrix corr = matmul_at_b(du, u);  // (U - X)^T U, r x r
  DenseMatrix w = matmul(y, corr);
  const double wa = p.alpha / sigma, wr = 1.0 / sigma;
  for (std::size_t i = 0; i < w.size(); ++i)
    w.data()[i] = y.data()[i] - wa * w.data()[i] - wr * rtu.data()[i];
  return shrink_singular_full(w, prob.eta / (2.0 * sigma));
}

inline DenseMatrix mc_update_x(const McProblem& prob, const SolverParams& /*params*/,
                               const DenseMatrix& x, const DenseMatrix& y, double mu) {
  if (!(mu > 0.0)) throw InvalidParameter("mc_update_x: mu must be positive");
  const std::vector<double> resid = mc_residual(prob, x, y);
  const DenseMatrix ry = mc_scatter_mul(prob.omega, resid, y, prob.m);
  return mc_step_x(prob, x, ry, mu).x;
}

inline DenseMatrix mc_update_y(const McProblem& prob, const SolverParams& params,
                               const DenseMatrix& x, const DenseMatrix& u,
                               const DenseMatrix& y, double sigma) {
  if (!(sigma > 0.0)) throw InvalidParameter("mc_update_y: sigma must be positive");
  const std::vector<double> resid = mc_residual(prob, x, y);
  const DenseMatrix rtu = mc_scatter_tmul(prob.omega, resid, u, prob.n);
  return mc_step_y(prob, params, x, y, u, rtu, sigma).x;
}

inline double mc_objective(const McProblem& prob, const DenseMatrix& x,
                           const DenseMatrix& y) {
  double quad = 0.0;
  for (double v : mc_residual(prob, x, y)) quad += v * v;
  return 0.5 * prob.eta * (nuclear_norm(x) + nuclear_norm(y)) + 0.5 * quad;
}

// Stepper with the sampling-aware kernels; the residual is carried between
// iterations and the nuclear norms fall out of the shrinkage steps.
class McStepper {
 public:
  McStepper(const McProblem& prob, const SolverParams& params, DenseMatrix x0,
            DenseMatrix y0)
      : prob_(prob), params_(params), x_(std::move(x0)), y_(std::move(y0)) {
    prob_.validate();
    if (x_.rows() != prob_.m || x_.cols() != prob_.r || y_.rows() != prob_.n ||
        y_.cols() != prob_.r)
      throw InvalidDimensions("mc: factor shapes disagree with the problem");
    require_finite(x_, "initial X");
    require_finite(y_, "initial Y");
  }

  double initial_objective() {
    resid_ = mc_residual(prob_, x_, y_);
    nuc_x_ = nuclear_norm(x_);
    nuc_y_ = nuclear_norm(y_);
    f_ = 0.5 * prob_.eta * (nuc_x_ + nuc_y_) + 0.5 * sq(resid_);
    return f_;
  }

  void begin_iteration() {
    ry_ = mc_scatter_mul(prob_.omega, resid_, y_, prob_.m);
    yk2_ = frob_sq(y_);
  }

  double yk_fro_sq() const { return yk2_; }

  void make_u(double mu) {
    ShrinkResult sr = mc_step_x(prob_, x_, ry_, mu);
    u_ = std::move(sr.x);
    nuc_u_ = std::accumulate(sr.s.begin(), sr.s.end(), 0.0);
    u2_ = frob_sq(u_);
    dx2_ = frob_sq(u_ - x_);
    rtu_ = mc_scatter_tmul(prob_.omega, resid_, u_, prob_.n);
  }

  void make_v(double sigma) {
    ShrinkResult sr = mc_step_y(prob_, params_, x_, y_, u_, rtu_, sigma);
    v_ = std::move(sr.x);
    nuc_v_ = std::accumulate(sr.s.begin(), sr.s.end(), 0.0);
    dy2_ = frob_sq(v_ - y_);
    resid_cand_ = mc_residual(prob_, u_, v_);
    fcand_ = 0.5 * prob_.eta * (nuc_u_ + nuc_v_) + 0.5 * sq(resid_cand_);
  }

  double u_fro_sq() const { return u2_; }
  double dx_sq() const { return dx2_; }
  double dy_sq() const { return dy2_; }
  double candidate_objective() const { return fcand_; }

  void accept(int /*rejected_candidates*/) {
    x_ = u_;
    y_ = v_;
    resid_ = resid_cand_;
    nuc_x_ = nuc_u_;
    nuc_y_ = nuc_v_;
    f_ = fcand_;
  }

  double current_objective() const { return f_; }
  double x_fro() const { return frob(x_); }
  double y_fro() const { return frob(y_); }
  const DenseMatrix& x() const { return x_; }
  const DenseMatrix& y() const { return y_; }

 private:
  static double sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a * a;
    return s;
  }

  const McProblem& prob_;
  const SolverParams& params_;
  DenseMatrix x_, y_, ry_, u_, v_, rtu_;
  std::vector<double> resid_, resid_cand_;
  double nuc_x_ = 0.0, nuc_y_ = 0.0, nuc_u_ = 0.0, nuc_v_ = 0.0;
  double f_ = 0.0, fcand_ = 0.0, yk2_ = 0.0, u2_ = 0.0, dx2_ = 0.0, dy2_ = 0.0;
};

inline SolveResult mc_solve(const McProblem& prob, const SolverParams& params,
                            DenseMatrix x0, DenseMatrix y0,
                            const SolveOptions& opt = {}) {
  if (params.scheme_x == Scheme::ProxLinear && params.scheme_y == Scheme::ProxLinear) {
    McStepper st(prob, params, std::move(x0), std::move(y0));
    SolveResult out;
    out.trace = run_naum(st, params, opt);
    out.x = st.x();
    out.y = st.y();
    return out;
  }
  const ProblemSpec spec = mc_problem_spec(prob);
  return naum_solve(spec, params, std::move(x0), std::move(y0), opt);
}

// Alternating proximal-gradient baseline with exact Lipschitz steps:
//   X+ = S_{eta/(2 c)}(X - (1/c) R Y),        c = |Y|_2^2
//   Y+ = S_{eta/(2 d)}(Y - (1/d) R+^T X+),    d = |X+|_2^2, R+ at (X+, Y)
inline std::pair<DenseMatrix, DenseMatrix> palm_step(const McProblem& prob,
                                                     const DenseMatrix& x,
                                                     const DenseMatrix& y) {
  const double c = std::max(spectral_norm_sq(y), 1e-16);
  std::vector<double> resid = mc_residual(prob, x, y);
  DenseMatrix w = x;
  {
    const DenseMatrix ry = mc_scatter_mul(prob.omega, resid, y, prob.m);
    const double inv = 1.0 / c;
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= inv * ry.data()[i];
  }
  DenseMatrix xp = shrink_singular(w, prob.eta / (2.0 * c));
  const double d = std::max(spectral_norm_sq(xp), 1e-16);
  resid = mc_residual(prob, xp, y);
  DenseMatrix wy = y;
  {
    const DenseMatrix rtx = mc_scatter_tmul(prob.omega, resid, xp, prob.n);
    const double inv = 1.0 / d;
    for (std::size_t i = 0; i < wy.size(); ++i) wy.data()[i] -= inv * rtx.data()[i];
  }
  DenseMatrix yp = shrink_singular(wy, prob.eta / (2.0 * d));
  return {std::move(xp), std::move(yp)};
}

inline SolveResult palm_solve(const McProblem& prob, DenseMatrix x0, DenseMatrix y0,
                              const SolveOptions& opt = {}) {
  prob.validate();
  require_finite(x0, "initial X");
  require_finite(y0, "initial Y");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  SolveResult out;
  out.x = std::move(x0);
  out.y = std::move(y0);
  out.trace.initial_objective = mc_objective(prob, out.x, out.y);
  out.trace.reason = StopReason::MaxIters;
  double f = out.trace.initial_objective;
  int consec = 0;
  for (std::size_t k = 1; k <= opt.max_iters; ++k) {
    if (elapsed() >= opt.max_seconds) {
      out.trace.reason = StopReason::MaxSeconds;
      break;
    }
    auto [xp, yp] = palm_step(prob, out.x, out.y);
    IterRecord rec;
    rec.k = k;
    rec.seconds = 0.0;
    rec.inner_iters = 1;
    rec.dx = frob(xp - out.x);
    rec.dy = frob(yp - out.y);
    out.x = std::move(xp);
    out.y = std::move(yp);
    const double fnew = mc_objective(prob, out.x, out.y);
    rec.objective = fnew;
    rec.seconds = elapsed();
    out.trace.records.push_back(rec);
    if (opt.use_stopping_rules) {
      if (std::abs(fnew - f) / (fnew + 1.0) <= opt.tol_obj) {
        if (++consec >= opt.consecutive) {
          out.trace.reason = StopReason::ObjectiveTol;
          break;
        }
      } else {
        consec = 0;
      }
      if ((rec.dx + rec.dy) / (frob(out.x) + frob(out.y) + 1.0) <= opt.tol_change) {
        out.trace.reason = StopReason::ChangeTol;
        break;
      }
    }
    f = fnew;
  }
  return out;
}

// Uniform sampling pattern without replacement: round(m n rate) positions.
inline SamplingPattern sample_mask(std::size_t m, std::size_t n, double rate,
                                   std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw InvalidParameter("sample_mask: rate must lie in (0, 1]");
  const std::uint64_t total = static_cast<std::uint64_t>(m) * n;
  const std::uint64_t want = std::min<std::uint64_t>(
      total, static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(total))));
  CounterRng rng = CounterRng(seed).split(0);  // stream 0 is reserved for masks
  std::vector<std::uint64_t> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::uint64_t i = 0; i < want; ++i)
    std::swap(pool[i], pool[i + rng.below(total - i)]);
  pool.resize(want);
  std::sort(pool.begin(), pool.end());
  SamplingPattern pat;
  pat.m = m;
  pat.n = n;
  pat.entries.reserve(want);
  for (std::uint64_t flat : pool)
    pat.entries.emplace_back(static_cast<std::uint32_t>(flat / n),
                             static_cast<std::uint32_t>(flat % n));
  return pat;
}

}  // namespace naum

#endif
