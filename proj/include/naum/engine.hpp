#ifndef NAUM_ENGINE_HPP
#define NAUM_ENGINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include "dense_matrix.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "problem.hpp"
#include "prox.hpp"

namespace naum {

namespace detail {

// Cycles through the columns of the factor being updated, minimizing over one
// column at a time while the others are held at their newest values. `zc`
// carries Z * Y (when updating X) or Z^T * U (when updating Y), `g` the Gram
// matrix of the fixed factor.
inline DenseMatrix column_cycle_update(const ProxOracle& oracle, double alpha,
                                       const DenseMatrix& xk, const DenseMatrix& zc,
                                       const DenseMatrix& g, double step) {
  const std::size_t m = xk.rows(), r = xk.cols();
  DenseMatrix u = xk;
  std::vector<double> acc(m);
  for (std::size_t i = 0; i < r; ++i) {
    // (partial residual) * y_i = zc.col(i) - sum_{j != i} current_col_j * g(j, i)
    for (std::size_t row = 0; row < m; ++row) acc[row] = zc(row, i);
    for (std::size_t j = 0; j < r; ++j) {
      if (j == i) continue;
      const double gji = g(j, i);
      if (gji == 0.0) continue;
      for (std::size_t row = 0; row < m; ++row) acc[row] -= u(row, j) * gji;
    }
    const double den = alpha * g(i, i) + step;
    if (!(den > 0.0))
      throw InvalidParameter("column update: nonpositive curvature, increase the step");
    const double t = 1.0 / den;
    for (std::size_t row = 0; row < m; ++row) {
      const double w = (alpha * acc[row] + step * xk(row, i)) * t;
      u(row, i) = oracle.prox_entry(t, w, row, i);
    }
  }
  return u;
}

// Exact minimizer of  alpha/2 |X G_half...|: solves the ridge problem
//   argmin_X alpha/2 |X Y^T - Z|^2 + step/2 |X - Xk|^2
// available in closed form only when the regularizer is absent.
inline DenseMatrix ridge_update(double alpha, const DenseMatrix& xk,
                                const DenseMatrix& zc, const DenseMatrix& g,
                                double step) {
  DenseMatrix a(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      a(i, j) = alpha * g(i, j) + (i == j ? step : 0.0);
  DenseMatrix rhs = zc;
  for (std::size_t i = 0; i < rhs.rows(); ++i)
    for (std::size_t j = 0; j < rhs.cols(); ++j)
      rhs(i, j) = alpha * rhs(i, j) + step * xk(i, j);
  return solve_spd_right(std::move(a), rhs);
}

}  // namespace detail

// One inexact minimization of the potential in X with Y, Z fixed.
inline DenseMatrix update_x(Scheme scheme, const ProblemSpec& prob,
                            const SolverParams& params, const DenseMatrix& xk,
                            const DenseMatrix& yk, const DenseMatrix& zk, double mu) {
  prob.check_factor_shapes(xk, yk);
  if (!(mu > 0.0)) throw InvalidParameter("update_x: mu must be positive");
  const DenseMatrix yty = gram(yk);
  const DenseMatrix zy = matmul(zk, yk);
  switch (scheme) {
    case Scheme::Proximal:
      if (prob.psi.kind() != ProxKind::Zero)
        throw UnsupportedScheme("proximal X step has no closed form for this regularizer");
      return detail::ridge_update(params.alpha, xk, zy, yty, mu);
    case Scheme::ProxLinear: {
      // U = prox(1/mu, Xk - (alpha/mu) (Xk Yk^T - Zk) Yk)
      DenseMatrix v = matmul(xk, yty);
      const double w = params.alpha / mu;
      for (std::size_t i = 0; i < v.size(); ++i)
        v.data()[i] = xk.data()[i] - w * (v.data()[i] - zy.data()[i]);
      return prob.psi.prox(1.0 / mu, v);
    }
    case Scheme::HierarchicalProx:
      if (!prob.psi.column_separable())
        throw UnsupportedScheme("column cycling needs a column-separable regularizer");
      return detail::column_cycle_update(prob.psi, params.alpha, xk, zy, yty, mu);
  }
  throw InvalidParameter("update_x: unknown scheme");
}

// One inexact minimization of the potential in Y with the fresh U and Z fixed.
inline DenseMatrix update_y(Scheme scheme, const ProblemSpec& prob,
                            const SolverParams& params, const DenseMatrix& u,
                            const DenseMatrix& yk, const DenseMatrix& zk,
                            double sigma) {
  prob.check_factor_shapes(u, yk);
  if (!(sigma > 0.0)) throw InvalidParameter("update_y: sigma must be positive");
  const DenseMatrix utu = gram(u);
  const DenseMatrix zu = matmul_at_b(zk, u);
  switch (scheme) {
    case Scheme::Proximal:
      if (prob.phi.kind() != ProxKind::Zero)
        throw UnsupportedScheme("proximal Y step has no closed form for this regularizer");
      return detail::ridge_update(params.alpha, yk, zu, utu, sigma);
    case Scheme::ProxLinear: {
      // V = prox(1/sigma, Yk - (alpha/sigma) (U Yk^T - Zk)^T U)
      DenseMatrix v = matmul(yk, utu);
      const double w = params.alpha / sigma;
      for (std::size_t i = 0; i < v.size(); ++i)
        v.data()[i] = yk.data()[i] - w * (v.data()[i] - zu.data()[i]);
      return prob.phi.prox(1.0 / sigma, v);
    }
    case Scheme::HierarchicalProx:
      if (!prob.phi.column_separable())
        throw UnsupportedScheme("column cycling needs a column-separable regularizer");
      return detail::column_cycle_update(prob.phi, params.alpha, yk, zu, utu, sigma);
  }
  throw InvalidParameter("update_y: unknown scheme");
}

// Residual of the first-order condition the X update is required to satisfy,
// measured through the prox fixed point |U - prox_psi(U - D)|_F where D is
// the smooth part of the subdifferential inclusion at U.
inline double scheme_residual_x(Scheme scheme, const ProblemSpec& prob,
                                const SolverParams& params, const DenseMatrix& xk,
                                const DenseMatrix& yk, const DenseMatrix& zk,
                                const DenseMatrix& u, double mu) {
  const std::size_t m = xk.rows(), r = xk.cols();
  const DenseMatrix yty = gram(yk);
  const DenseMatrix zy = matmul(zk, yk);
  DenseMatrix d(m, r);
  switch (scheme) {
    case Scheme::Proximal:
      d = params.alpha * (matmul(u, yty) - zy);
      break;
    case Scheme::ProxLinear:
      d = params.alpha * (matmul(xk, yty) - zy);
      break;
    case Scheme::HierarchicalProx: {
      // column i sees columns j <= i of U and j > i of Xk
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t row = 0; row < m; ++row) {
          double s = -zy(row, i);
          for (std::size_t j = 0; j <= i; ++j) s += u(row, j) * yty(j, i);
          for (std::size_t j = i + 1; j < r; ++j) s += xk(row, j) * yty(j, i);
          d(row, i) = params.alpha * s;
        }
      }
      break;
    }
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    d.data()[i] += mu * (u.data()[i] - xk.data()[i]);
  return frob(u - prob.psi.prox(1.0, u - d));
}

inline double scheme_residual_y(Scheme scheme, const ProblemSpec& prob,
                                const SolverParams& params, const DenseMatrix& u,
                                const DenseMatrix& yk, const DenseMatrix& zk,
                                const DenseMatrix& v, double sigma) {
  const std::size_t n = yk.rows(), r = yk.cols();
  const DenseMatrix utu = gram(u);
  const DenseMatrix zu = matmul_at_b(zk, u);
  DenseMatrix d(n, r);
  switch (scheme) {
    case Scheme::Proximal:
      d = params.alpha * (matmul(v, utu) - zu);
      break;
    case Scheme::ProxLinear:
      d = params.alpha * (matmul(yk, utu) - zu);
      break;
    case Scheme::HierarchicalProx: {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t row = 0; row < n; ++row) {
          double s = -zu(row, i);
          for (std::size_t j = 0; j <= i; ++j) s += v(row, j) * utu(j, i);
          for (std::size_t j = i + 1; j < r; ++j) s += yk(row, j) * utu(j, i);
          d(row, i) = params.alpha * s;
        }
      }
      break;
    }
  }
  for (std::size_t i = 0; i < d.size(); ++i)
    d.data()[i] += sigma * (v.data()[i] - yk.data()[i]);
  return frob(v - prob.phi.prox(1.0, v - d));
}

enum class StopReason { MaxIters, MaxSeconds, ObjectiveTol, ChangeTol };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIters: return "max_iters";
    case StopReason::MaxSeconds: return "max_seconds";
    case StopReason::ObjectiveTol: return "objective_tol";
    case StopReason::ChangeTol: return "change_tol";
  }
  return "?";
}

struct SolveOptions {
  std::size_t max_iters = 5000;
  double max_seconds = std::numeric_limits<double>::infinity();
  double tol_obj = 1e-4;     // relative objective change, rule (i)
  double tol_change = 1e-4;  // relative iterate change, rule (ii)
  int consecutive = 3;       // how many times rule (i) must hold in a row
  bool use_stopping_rules = true;  // false: run to max_iters / max_seconds only
};

struct IterRecord {
  std::size_t k = 0;
  double objective = 0.0;
  double seconds = 0.0;  // cumulative wall clock when the iterate was accepted
  double mu = 0.0, sigma = 0.0;
  int inner_iters = 0;
  double dx = 0.0, dy = 0.0;
};

struct Trace {
  double initial_objective = 0.0;
  std::vector<IterRecord> records;
  StopReason reason = StopReason::MaxIters;
  // health counters; all zero on a well-behaved run
  int descent_violations = 0;
  int cap_violations = 0;
  int forced_accepts = 0;
};

struct LineSearchResult {
  double mu = 0.0, sigma = 0.0;
  int inner = 0;
  bool forced = false;
  double mu_max = 0.0;
  double sigma_cap = 0.0;  // (alpha + 2 gamma rho) |U|_F^2 + c at the accepted U
  double yk2 = 0.0;
};

// Non-monotone search for per-iteration step constants (mu, sigma). On
// success a candidate pair is staged inside the stepper; the caller commits
// it. A step is forced through (flagged) only if the theoretically safe
// (mu_max, sigma_cap) candidate fails the acceptance test to rounding.
template <class Stepper>
LineSearchResult line_search(Stepper& st, const SolverParams& p, double window_max,
                             double mu_bar_prev, double sigma_bar_prev) {
  LineSearchResult out;
  out.yk2 = st.yk_fro_sq();
  const double coef = p.alpha + 2.0 * p.gamma * p.rho;
  out.mu_max = coef * out.yk2 + p.c;
  double mu_tilde = std::max(0.1 * mu_bar_prev, p.mu_min);
  double sigma = std::min(std::max(0.1 * sigma_bar_prev, p.sigma_min), p.sigma_max);
  double mu = 0.0;
  bool remake_u = true;
  while (true) {
    if (remake_u) {
      mu = std::min(mu_tilde, out.mu_max);
      st.make_u(mu);
    }
    st.make_v(sigma);
    ++out.inner;
    const double decrease = st.candidate_objective() - window_max;
    const double need = -0.5 * p.c * (st.dx_sq() + st.dy_sq());
    if (decrease <= need) break;
    if (mu == out.mu_max) {
      const double sigma_cap = coef * st.u_fro_sq() + p.c;
      if (sigma == sigma_cap) {
        out.forced = true;  // rounding kept the safe candidate from passing
        break;
      }
      sigma = std::min(p.tau * sigma, sigma_cap);
      remake_u = false;
    } else {
      mu_tilde = p.tau * mu;
      sigma = p.tau * sigma;
      remake_u = true;
    }
  }
  out.mu = mu;
  out.sigma = sigma;
  out.sigma_cap = coef * st.u_fro_sq() + p.c;
  return out;
}

// Ceiling implied by the geometric growth of mu and sigma: the loop above
// cannot evaluate more candidates than this.
inline int line_search_cap(const SolverParams& p, double mu_max, double sigma_cap) {
  const double lt = std::log(p.tau);
  const double mu_part =
      std::floor((std::log(mu_max) - std::log(p.mu_min)) / lt + 2.0);
  const double sg_part =
      std::floor((std::log(sigma_cap) - std::log(p.sigma_min)) / lt + 1.0);
  return static_cast<int>(std::max(1.0, mu_part) + sg_part) + 1;
}

template <class Stepper>
Trace run_naum(Stepper& st, const SolverParams& params, const SolveOptions& opt) {
  params.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Trace trace;
  double f = st.initial_objective();
  if (std::isinf(f))
    throw InfeasibleInitialization("starting point has infinite objective value");
  if (!std::isfinite(f)) throw NonFiniteInput("objective is NaN at the starting point");
  trace.initial_objective = f;

  std::deque<double> window{f};
  double mu_bar = params.mu_min, sigma_bar = params.sigma_min;
  const double coef = params.alpha + 2.0 * params.gamma * params.rho;
  int consec = 0;
  trace.reason = StopReason::MaxIters;

  for (std::size_t k = 1; k <= opt.max_iters; ++k) {
    if (elapsed() >= opt.max_seconds) {
      trace.reason = StopReason::MaxSeconds;
      break;
    }
    st.begin_iteration();
    const double wmax = *std::max_element(window.begin(), window.end());
    const LineSearchResult ls = line_search(st, params, wmax, mu_bar, sigma_bar);

    const double fnew = st.candidate_objective();
    const double dx2 = st.dx_sq(), dy2 = st.dy_sq();
    const double u2 = st.u_fro_sq();
    st.accept(ls.inner - 1);
    mu_bar = ls.mu;
    sigma_bar = ls.sigma;

    if (ls.forced) ++trace.forced_accepts;
    // per-step decrease guaranteed by the curvature bounds
    const double bound = -0.5 * (ls.mu - coef * ls.yk2) * dx2 -
                         0.5 * (ls.sigma - coef * u2) * dy2;
    if (fnew - f > bound + 1e-8) ++trace.descent_violations;
    if (ls.inner > line_search_cap(params, ls.mu_max, ls.sigma_cap))
      ++trace.cap_violations;

    IterRecord rec;
    rec.k = k;
    rec.objective = fnew;
    rec.seconds = elapsed();
    rec.mu = ls.mu;
    rec.sigma = ls.sigma;
    rec.inner_iters = ls.inner;
    rec.dx = std::sqrt(std::max(dx2, 0.0));
    rec.dy = std::sqrt(std::max(dy2, 0.0));
    trace.records.push_back(rec);

    window.push_back(fnew);
    if (window.size() > static_cast<std::size_t>(params.window) + 1)
      window.pop_front();

    if (opt.use_stopping_rules) {
      if (std::abs(fnew - f) / (fnew + 1.0) <= opt.tol_obj) {
        if (++consec >= opt.consecutive) {
          trace.reason = StopReason::ObjectiveTol;
          f = fnew;
          break;
        }
      } else {
        consec = 0;
      }
      if ((rec.dx + rec.dy) / (st.x_fro() + st.y_fro() + 1.0) <= opt.tol_change) {
        trace.reason = StopReason::ChangeTol;
        f = fnew;
        break;
      }
    }
    f = fnew;
  }
  return trace;
}

// Reference stepper: keeps the coupling matrix Z explicitly and evaluates
// everything densely. Specialized steppers replicate its behaviour with
// implicit products; it is the correctness baseline they are tested against.
class GenericStepper {
 public:
  GenericStepper(const ProblemSpec& prob, const SolverParams& params, DenseMatrix x0,
                 DenseMatrix y0)
      : prob_(prob), params_(params), x_(std::move(x0)), y_(std::move(y0)) {
    prob_.validate();
    prob_.check_factor_shapes(x_, y_);
    require_finite(x_, "initial X");
    require_finite(y_, "initial Y");
  }

  double initial_objective() {
    f_ = objective(prob_, x_, y_);
    return f_;
  }

  void begin_iteration() {
    z_ = z_formula(prob_, params_, x_, y_);
    yk2_ = frob_sq(y_);
  }

  double yk_fro_sq() const { return yk2_; }

  void make_u(double mu) {
    u_ = update_x(params_.scheme_x, prob_, params_, x_, y_, z_, mu);
    u2_ = frob_sq(u_);
    dx2_ = frob_sq(u_ - x_);
  }

  void make_v(double sigma) {
    v_ = update_y(params_.scheme_y, prob_, params_, u_, y_, z_, sigma);
    dy2_ = frob_sq(v_ - y_);
    fcand_ = objective(prob_, u_, v_);
  }

  double u_fro_sq() const { return u2_; }
  double dx_sq() const { return dx2_; }
  double dy_sq() const { return dy2_; }
  double candidate_objective() const { return fcand_; }

  void accept(int /*rejected_candidates*/) {
    x_ = u_;
    y_ = v_;
    f_ = fcand_;
  }

  double current_objective() const { return f_; }
  double x_fro() const { return frob(x_); }
  double y_fro() const { return frob(y_); }
  const DenseMatrix& x() const { return x_; }
  const DenseMatrix& y() const { return y_; }

 private:
  ProblemSpec prob_;  // by value: the stepper outlives many call sites
  SolverParams params_;
  DenseMatrix x_, y_, z_, u_, v_;
  double f_ = 0.0, fcand_ = 0.0;
  double yk2_ = 0.0, u2_ = 0.0, dx2_ = 0.0, dy2_ = 0.0;
};

struct SolveResult {
  DenseMatrix x, y;
  Trace trace;
};

inline SolveResult naum_solve(const ProblemSpec& prob, const SolverParams& params,
                              DenseMatrix x0, DenseMatrix y0,
                              const SolveOptions& opt = {}) {
  GenericStepper st(prob, params, std::move(x0), std::move(y0));
  SolveResult out;
  out.trace = run_naum(st, params, opt);
  out.x = st.x();
  out.y = st.y();
  return out;
}

}  // namespace naum

#endif
