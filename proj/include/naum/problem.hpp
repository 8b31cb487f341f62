#ifndef NAUM_PROBLEM_HPP
#define NAUM_PROBLEM_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "dense_matrix.hpp"
#include "errors.hpp"
#include "linear_map.hpp"
#include "params.hpp"
#include "prox.hpp"

namespace naum {

// The factorization problem
//   minimize  psi(X) + phi(Y) + 1/2 |A(X Y^T) - b|^2
// over X (m x r) and Y (n x r), with A a linear measurement map whose
// adjoint is an isometry on its range (A A* = I).
struct ProblemSpec {
  std::size_t m = 0, n = 0, r = 0;
  ProxOracle psi = ProxOracle::zero();
  ProxOracle phi = ProxOracle::zero();
  LinearMap map;
  std::vector<double> b;

  void validate() const {
    if (m == 0 || n == 0 || r == 0)
      throw InvalidDimensions("problem: dimensions must be positive");
    if (map.m != m || map.n != n)
      throw InvalidDimensions("problem: map shape disagrees with m x n");
    if (b.size() != map.q())
      throw InvalidDimensions("problem: b has length " + std::to_string(b.size()) +
                              ", map produces " + std::to_string(map.q()));
    for (double v : b)
      if (!std::isfinite(v)) throw NonFiniteInput("problem: b has non-finite entry");
  }

  void check_factor_shapes(const DenseMatrix& x, const DenseMatrix& y) const {
    if (x.rows() != m || x.cols() != r)
      throw InvalidDimensions("X is " + shape_str(x) + ", expected " +
                              std::to_string(m) + "x" + std::to_string(r));
    if (y.rows() != n || y.cols() != r)
      throw InvalidDimensions("Y is " + shape_str(y) + ", expected " +
                              std::to_string(n) + "x" + std::to_string(r));
  }
};

// A(X Y^T) - b, computed without forming the m x n product.
inline std::vector<double> residual_vector(const ProblemSpec& prob,
                                           const DenseMatrix& x,
                                           const DenseMatrix& y) {
  prob.check_factor_shapes(x, y);
  std::vector<double> res(prob.map.q());
  if (prob.map.kind == LinearMap::Kind::Identity) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < prob.m; ++i) {
      const double* xi = x.row(i);
      for (std::size_t j = 0; j < prob.n; ++j) {
        const double* yj = y.row(j);
        double s = 0.0;
        for (std::size_t l = 0; l < prob.r; ++l) s += xi[l] * yj[l];
        res[t] = s - prob.b[t];
        ++t;
      }
    }
  } else {
    for (std::size_t t = 0; t < res.size(); ++t) {
      const auto& e = prob.map.pattern.entries[t];
      const double* xi = x.row(e.first);
      const double* yj = y.row(e.second);
      double s = 0.0;
      for (std::size_t l = 0; l < prob.r; ++l) s += xi[l] * yj[l];
      res[t] = s - prob.b[t];
    }
  }
  return res;
}

// F(X, Y) = psi(X) + phi(Y) + 1/2 |A(X Y^T) - b|^2
inline double objective(const ProblemSpec& prob, const DenseMatrix& x,
                        const DenseMatrix& y) {
  require_finite(x, "objective: X");
  require_finite(y, "objective: Y");
  const double reg = prob.psi.eval(x) + prob.phi.eval(y);
  double quad = 0.0;
  for (double v : residual_vector(prob, x, y)) quad += v * v;
  return reg + 0.5 * quad;
}

// The coupling point that ties the potential below back to F:
//   Z = (I - beta/(alpha+beta) A*A)(X Y^T) + beta/(alpha+beta) A*(b).
inline DenseMatrix z_formula(const ProblemSpec& prob, const SolverParams& params,
                             const DenseMatrix& x, const DenseMatrix& y) {
  prob.check_factor_shapes(x, y);
  require_finite(x, "z_formula: X");
  require_finite(y, "z_formula: Y");
  const double apb = params.alpha + params.beta;
  if (apb == 0.0) throw InvalidParameter("z_formula: alpha + beta is zero");
  const double w = params.beta / apb;
  DenseMatrix z = matmul_a_bt(x, y);
  if (prob.map.kind == LinearMap::Kind::Identity) {
    std::size_t t = 0;
    for (std::size_t i = 0; i < prob.m; ++i)
      for (std::size_t j = 0; j < prob.n; ++j, ++t)
        z(i, j) = (1.0 - w) * z(i, j) + w * prob.b[t];
  } else {
    for (std::size_t t = 0; t < prob.b.size(); ++t) {
      const auto& e = prob.map.pattern.entries[t];
      z(e.first, e.second) = (1.0 - w) * z(e.first, e.second) + w * prob.b[t];
    }
  }
  return z;
}

// Theta(X, Y, Z) = psi(X) + phi(Y) + alpha/2 |X Y^T - Z|^2 + beta/2 |A(Z) - b|^2.
// At Z = z_formula(X, Y) this equals F(X, Y).
inline double potential(const ProblemSpec& prob, const SolverParams& params,
                        const DenseMatrix& x, const DenseMatrix& y,
                        const DenseMatrix& z) {
  prob.check_factor_shapes(x, y);
  if (z.rows() != prob.m || z.cols() != prob.n)
    throw InvalidDimensions("potential: Z is " + shape_str(z));
  require_finite(z, "potential: Z");
  const double reg = prob.psi.eval(x) + prob.phi.eval(y);
  DenseMatrix d = matmul_a_bt(x, y) - z;
  double couple = frob_sq(d);
  double meas = 0.0;
  const std::vector<double> az = apply(prob.map, z);
  for (std::size_t t = 0; t < az.size(); ++t) {
    const double v = az[t] - prob.b[t];
    meas += v * v;
  }
  return reg + 0.5 * params.alpha * couple + 0.5 * params.beta * meas;
}

// Scaled first-order stationarity measure at (X, Y):
//   ( |X - prox_psi(X - G Y)| + |Y - prox_phi(Y - G^T X)| ) / (1 + |X| + |Y|)
// with G = A*(A(X Y^T) - b).
inline double stationarity_residual(const ProblemSpec& prob, const DenseMatrix& x,
                                    const DenseMatrix& y) {
  const DenseMatrix g = adjoint(prob.map, residual_vector(prob, x, y));
  const DenseMatrix gx = matmul(g, y);
  const DenseMatrix gy = matmul_at_b(g, x);
  const double rx = frob(x - prob.psi.prox(1.0, x - gx));
  const double ry = frob(y - prob.phi.prox(1.0, y - gy));
  return (rx + ry) / (1.0 + frob(x) + frob(y));
}

}  // namespace naum

#endif
