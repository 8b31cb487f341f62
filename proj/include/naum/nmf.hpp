#ifndef NAUM_NMF_HPP
#define NAUM_NMF_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <variant>

#include "dense_matrix.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "params.hpp"
#include "problem.hpp"
#include "sparse_matrix.hpp"

namespace naum {

// The data matrix may be dense or sparse; the solvers only ever need the
// products M * B and M^T * B plus a few scalars.
using MatrixData = std::variant<DenseMatrix, SparseMatrix>;

inline std::size_t data_rows(const MatrixData& m) {
  return std::visit([](const auto& v) { return v.rows(); }, m);
}
inline std::size_t data_cols(const MatrixData& m) {
  return std::visit([](const auto& v) { return v.cols(); }, m);
}
inline double data_frob_sq(const MatrixData& m) {
  if (std::holds_alternative<DenseMatrix>(m))
    return frob_sq(std::get<DenseMatrix>(m));
  return std::get<SparseMatrix>(m).frob_sq();
}
inline bool data_all_finite(const MatrixData& m) {
  return std::visit([](const auto& v) { return v.all_finite(); }, m);
}
inline bool data_nonnegative(const MatrixData& m) {
  if (std::holds_alternative<DenseMatrix>(m)) {
    const DenseMatrix& d = std::get<DenseMatrix>(m);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.data()[i] < 0.0) return false;
    return true;
  }
  return std::get<SparseMatrix>(m).min_value() >= 0.0;
}
inline DenseMatrix data_matmul(const MatrixData& m, const DenseMatrix& b) {
  return std::visit([&](const auto& v) { return matmul(v, b); }, m);
}
inline DenseMatrix data_matmul_at_b(const MatrixData& m, const DenseMatrix& b) {
  return std::visit([&](const auto& v) { return matmul_at_b(v, b); }, m);
}
inline DenseMatrix data_to_dense(const MatrixData& m) {
  if (std::holds_alternative<DenseMatrix>(m)) return std::get<DenseMatrix>(m);
  return std::get<SparseMatrix>(m).to_dense();
}

// Bound-constrained nonnegative factorization of M (m x n) into X Y^T with
// X in [0, x_max]^(m x r) and Y in [0, y_max]^(n x r):
//   minimize 1/2 |X Y^T - M|_F^2  subject to the box constraints.
struct NmfProblem {
  MatrixData data;
  std::size_t r = 0;
  double x_max = 1e16;
  double y_max = 1e16;

  std::size_t rows() const { return data_rows(data); }
  std::size_t cols() const { return data_cols(data); }

  void validate() const {
    if (rows() == 0 || cols() == 0 || r == 0)
      throw InvalidDimensions("nmf: dimensions must be positive");
    if (!data_all_finite(data)) throw NonFiniteInput("nmf: data has non-finite entry");
    if (!data_nonnegative(data)) throw InvalidData("nmf: data must be nonnegative");
    if (!(x_max > 0.0) || !(y_max > 0.0))
      throw InvalidParameter("nmf: factor bounds must be positive");
  }
};

// The equivalent generic problem (identity measurement map, box regularizers);
// the dense reference path for what the cached sweeps below compute implicitly.
inline ProblemSpec nmf_problem_spec(const NmfProblem& prob) {
  prob.validate();
  ProblemSpec spec;
  spec.m = prob.rows();
  spec.n = prob.cols();
  spec.r = prob.r;
  spec.psi = ProxOracle::box(0.0, prob.x_max);
  spec.phi = ProxOracle::box(0.0, prob.y_max);
  spec.map = LinearMap::identity(spec.m, spec.n);
  const DenseMatrix dense = data_to_dense(prob.data);
  spec.b.assign(dense.data(), dense.data() + dense.size());
  return spec;
}

// Column i of the X update against the implicit coupling matrix
//   Z = alpha/(alpha+beta) X Y^T + beta/(alpha+beta) M.
// `u` carries updated columns j < i and original columns j >= i; column i is
// written in place. `my` is M * Y and `yty` the Gram matrix of Y.
inline void nmf_column_x(std::size_t i, const NmfProblem& prob,
                         const SolverParams& p, const DenseMatrix& x,
                         const DenseMatrix& yty, const DenseMatrix& my, double mu,
                         DenseMatrix& u) {
  const std::size_t m = x.rows(), r = x.cols();
  const double apb = p.alpha + p.beta;
  const double wx = p.alpha / apb, wm = p.beta / apb;
  const double den = p.alpha * yty(i, i) + mu;
  if (!(den > 0.0))
    throw InvalidParameter("nmf column update: nonpositive curvature");
  for (std::size_t row = 0; row < m; ++row) {
    const double* xrow = x.row(row);
    const double* urow = u.row(row);
    double zy = 0.0;  // (Z y_i) at this row, with Z kept implicit
    for (std::size_t j = 0; j < r; ++j) zy += xrow[j] * yty(j, i);
    zy = wx * zy + wm * my(row, i);
    double sub = 0.0;  // columns already updated (j < i) and still-old ones (j > i)
    for (std::size_t j = 0; j < i; ++j) sub += urow[j] * yty(j, i);
    for (std::size_t j = i + 1; j < r; ++j) sub += xrow[j] * yty(j, i);
    const double w = (p.alpha * (zy - sub) + mu * xrow[i]) / den;
    u(row, i) = std::clamp(w, 0.0, prob.x_max);
  }
}

// Column i of the Y update; `xtu` is X^T U, `utu` the Gram matrix of U and
// `mtu` is M^T U. `v` carries updated columns j < i and original columns
// j >= i of Y.
inline void nmf_column_y(std::size_t i, const NmfProblem& prob,
                         const SolverParams& p, const DenseMatrix& y,
                         const DenseMatrix& utu, const DenseMatrix& xtu,
                         const DenseMatrix& mtu, double sigma, DenseMatrix& v) {
  const std::size_t n = y.rows(), r = y.cols();
  const double apb = p.alpha + p.beta;
  const double wx = p.alpha / apb, wm = p.beta / apb;
  const double den = p.alpha * utu(i, i) + sigma;
  if (!(den > 0.0))
    throw InvalidParameter("nmf column update: nonpositive curvature");
  for (std::size_t row = 0; row < n; ++row) {
    const double* yrow = y.row(row);
    const double* vrow = v.row(row);
    double zu = 0.0;  // (Z^T u_i) at this row
    for (std::size_t j = 0; j < r; ++j) zu += yrow[j] * xtu(j, i);
    zu = wx * zu + wm * mtu(row, i);
    double sub = 0.0;
    for (std::size_t j = 0; j < i; ++j) sub += vrow[j] * utu(j, i);
    for (std::size_t j = i + 1; j < r; ++j) sub += yrow[j] * utu(j, i);
    const double w = (p.alpha * (zu - sub) + sigma * yrow[i]) / den;
    v(row, i) = std::clamp(w, 0.0, prob.y_max);
  }
}

struct NmfStepMetrics {
  double objective = 0.0;
  double dx_sq = 0.0;
  double dy_sq = 0.0;
};

// Candidate metrics from cached Gram blocks only; nothing m x n is formed.
//   |U V^T - M|^2 = tr((U^T U)(V^T V)) - 2 <M^T U, V> + |M|^2
//   |U - X|^2     = tr(U^T U) - 2 <X, U> + tr(X^T X)
inline NmfStepMetrics nmf_cached_metrics(const DenseMatrix& utu, const DenseMatrix& vtv,
                                         double m_fro2, double mtu_dot_v,
                                         double tr_xtx, double x_dot_u, double tr_yty,
                                         double y_dot_v) {
  NmfStepMetrics out;
  out.objective =
      0.5 * (trace_of_product(utu, vtv) - 2.0 * mtu_dot_v + m_fro2);
  out.dx_sq = std::max(trace(utu) - 2.0 * x_dot_u + tr_xtx, 0.0);
  out.dy_sq = std::max(trace(vtv) - 2.0 * y_dot_v + tr_yty, 0.0);
  return out;
}

// Stepper with the implicit-product kernels and Gram caching. Matches the
// GenericStepper on the equivalent problem up to floating point roundoff.
class NmfStepper {
 public:
  NmfStepper(const NmfProblem& prob, const SolverParams& params, DenseMatrix x0,
             DenseMatrix y0)
      : prob_(prob), params_(params), x_(std::move(x0)), y_(std::move(y0)) {
    prob_.validate();
    if (x_.rows() != prob_.rows() || x_.cols() != prob_.r ||
        y_.rows() != prob_.cols() || y_.cols() != prob_.r)
      throw InvalidDimensions("nmf: factor shapes disagree with the data");
    require_finite(x_, "initial X");
    require_finite(y_, "initial Y");
    m_fro2_ = data_frob_sq(prob_.data);
    refresh();
  }

  double initial_objective() {
    if (!feasible(x_, prob_.x_max) || !feasible(y_, prob_.y_max))
      return std::numeric_limits<double>::infinity();
    f_ = 0.5 * (trace_of_product(xtx_, yty_) - 2.0 * dot(my_, x_) + m_fro2_);
    return f_;
  }

  void begin_iteration() {
    if (my_dirty_) {
      my_ = data_matmul(prob_.data, y_);
      my_dirty_ = false;
    }
  }

  double yk_fro_sq() const { return tr_yty_; }

  void make_u(double mu) {
    u_ = x_;
    for (std::size_t i = 0; i < prob_.r; ++i)
      nmf_column_x(i, prob_, params_, x_, yty_, my_, mu, u_);
    utu_ = gram(u_);
    xtu_ = matmul_at_b(x_, u_);
    mtu_ = data_matmul_at_b(prob_.data, u_);
    u2_ = trace(utu_);
    dx2_ = std::max(u2_ - 2.0 * dot(x_, u_) + tr_xtx_, 0.0);
  }

  void make_v(double sigma) {
    v_ = y_;
    for (std::size_t i = 0; i < prob_.r; ++i)
      nmf_column_y(i, prob_, params_, y_, utu_, xtu_, mtu_, sigma, v_);
    vtv_ = gram(v_);
    const NmfStepMetrics met = nmf_cached_metrics(
        utu_, vtv_, m_fro2_, dot(mtu_, v_), tr_xtx_, dot(x_, u_), tr_yty_, dot(y_, v_));
    fcand_ = met.objective;
    dy2_ = met.dy_sq;
  }

  double u_fro_sq() const { return u2_; }
  double dx_sq() const { return dx2_; }
  double dy_sq() const { return dy2_; }
  double candidate_objective() const { return fcand_; }

  void accept(int rejected_candidates) {
    x_ = u_;
    y_ = v_;
    xtx_ = utu_;
    yty_ = vtv_;
    tr_xtx_ = trace(xtx_);
    tr_yty_ = trace(yty_);
    f_ = fcand_;
    my_dirty_ = true;
    ++accepted_since_refresh_;
    if (accepted_since_refresh_ >= kRefreshEvery || rejected_candidates >= 5) refresh();
  }

  double current_objective() const { return f_; }
  double x_fro() const { return std::sqrt(std::max(tr_xtx_, 0.0)); }
  double y_fro() const { return std::sqrt(std::max(tr_yty_, 0.0)); }
  const DenseMatrix& x() const { return x_; }
  const DenseMatrix& y() const { return y_; }

  // from-scratch objective, for drift checks
  double objective_fresh() const {
    const DenseMatrix fx = gram(x_), fy = gram(y_);
    const DenseMatrix my = data_matmul(prob_.data, y_);
    return 0.5 * (trace_of_product(fx, fy) - 2.0 * dot(my, x_) + m_fro2_);
  }

  static constexpr int kRefreshEvery = 100;

 private:
  static bool feasible(const DenseMatrix& a, double hi) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.data()[i] < 0.0 || a.data()[i] > hi) return false;
    return true;
  }

  void refresh() {
    xtx_ = gram(x_);
    yty_ = gram(y_);
    tr_xtx_ = trace(xtx_);
    tr_yty_ = trace(yty_);
    my_ = data_matmul(prob_.data, y_);
    my_dirty_ = false;
    accepted_since_refresh_ = 0;
  }

  const NmfProblem& prob_;
  const SolverParams& params_;
  DenseMatrix x_, y_;
  DenseMatrix xtx_, yty_, my_;
  double m_fro2_ = 0.0, tr_xtx_ = 0.0, tr_yty_ = 0.0, f_ = 0.0;
  DenseMatrix u_, v_, utu_, xtu_, mtu_, vtv_;
  double u2_ = 0.0, dx2_ = 0.0, dy2_ = 0.0, fcand_ = 0.0;
  int accepted_since_refresh_ = 0;
  bool my_dirty_ = false;
};

// Runs the solver on a factorization problem; the cached column-cycling
// stepper handles the default scheme pair, anything else goes through the
// dense reference path.
inline SolveResult nmf_solve(const NmfProblem& prob, const SolverParams& params,
                             DenseMatrix x0, DenseMatrix y0,
                             const SolveOptions& opt = {}) {
  if (params.scheme_x == Scheme::HierarchicalProx &&
      params.scheme_y == Scheme::HierarchicalProx) {
    NmfStepper st(prob, params, std::move(x0), std::move(y0));
    SolveResult out;
    out.trace = run_naum(st, params, opt);
    out.x = st.x();
    out.y = st.y();
    return out;
  }
  const ProblemSpec spec = nmf_problem_spec(prob);
  return naum_solve(spec, params, std::move(x0), std::move(y0), opt);
}

// Exact cyclic coordinate descent baseline: each column update minimizes the
// objective over that column subject to nonnegativity, so the objective never
// increases.
inline void hals_step(const MatrixData& m, DenseMatrix& x, DenseMatrix& y) {
  const std::size_t rows = x.rows(), cols = y.rows(), r = x.cols();
  {
    const DenseMatrix my = data_matmul(m, y);
    const DenseMatrix yty = gram(y);
    for (std::size_t i = 0; i < r; ++i) {
      const double den = std::max(yty(i, i), 1e-16);
      for (std::size_t row = 0; row < rows; ++row) {
        double g = my(row, i);
        const double* xr = x.row(row);
        for (std::size_t j = 0; j < r; ++j) g -= xr[j] * yty(j, i);
        x(row, i) = std::max(0.0, x(row, i) + g / den);
      }
    }
  }
  {
    const DenseMatrix mtx = data_matmul_at_b(m, x);
    const DenseMatrix xtx = gram(x);
    for (std::size_t i = 0; i < r; ++i) {
      const double den = std::max(xtx(i, i), 1e-16);
      for (std::size_t row = 0; row < cols; ++row) {
        double g = mtx(row, i);
        const double* yr = y.row(row);
        for (std::size_t j = 0; j < r; ++j) g -= yr[j] * xtx(j, i);
        y(row, i) = std::max(0.0, y(row, i) + g / den);
      }
    }
  }
}

inline SolveResult hals_solve(const NmfProblem& prob, DenseMatrix x0, DenseMatrix y0,
                              const SolveOptions& opt = {}) {
  prob.validate();
  require_finite(x0, "initial X");
  require_finite(y0, "initial Y");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double m2 = data_frob_sq(prob.data);
  auto objective_of = [&](const DenseMatrix& x, const DenseMatrix& y) {
    const DenseMatrix mty = data_matmul_at_b(prob.data, x);
    return 0.5 * (trace_of_product(gram(x), gram(y)) - 2.0 * dot(mty, y) + m2);
  };
  SolveResult out;
  out.x = std::move(x0);
  out.y = std::move(y0);
  out.trace.initial_objective = objective_of(out.x, out.y);
  out.trace.reason = StopReason::MaxIters;
  double f = out.trace.initial_objective;
  int consec = 0;
  for (std::size_t k = 1; k <= opt.max_iters; ++k) {
    if (elapsed() >= opt.max_seconds) {
      out.trace.reason = StopReason::MaxSeconds;
      break;
    }
    const DenseMatrix xp = out.x, yp = out.y;
    hals_step(prob.data, out.x, out.y);
    const double fnew = objective_of(out.x, out.y);
    IterRecord rec;
    rec.k = k;
    rec.objective = fnew;
    rec.seconds = elapsed();
    rec.inner_iters = 1;
    rec.dx = frob(out.x - xp);
    rec.dy = frob(out.y - yp);
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

}  // namespace naum

#endif
