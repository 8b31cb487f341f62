#ifndef NAUM_SVD_HPP
#define NAUM_SVD_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "dense_matrix.hpp"
#include "errors.hpp"

namespace naum {

struct SvdResult {
  DenseMatrix u;          // m x t
  std::vector<double> s;  // t, descending, nonnegative
  DenseMatrix v;          // n x t
};

namespace detail {

// Cyclic Jacobi diagonalization of a symmetric matrix. On return `a` is
// (numerically) diagonal and `q` holds the accumulated rotations, so the
// input equals q * a * q^T.
inline void jacobi_eigh(DenseMatrix& a, DenseMatrix& q, int max_sweeps = 50,
                        double off_tol = 1e-14) {
  const std::size_t n = a.rows();
  q = DenseMatrix::identity(n);
  const double scale = frob(a);
  if (scale == 0.0 || n < 2) return;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) off += 2.0 * a(p, r) * a(p, r);
    if (std::sqrt(off) <= off_tol * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J with J the (p, r) rotation
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - s * akr;
          a(k, r) = s * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - s * ark;
          a(r, k) = s * apk + c * ark;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - s * qkr;
          q(k, r) = s * qkp + c * qkr;
        }
      }
    }
  }
}

// Appends orthonormal columns to u (m x t, first `have` columns valid) until
// all t columns are filled, by orthogonalizing standard basis vectors.
inline void complete_orthonormal(DenseMatrix& u, std::size_t have) {
  const std::size_t m = u.rows(), t = u.cols();
  std::size_t next = have;
  for (std::size_t e = 0; e < m && next < t; ++e) {
    std::vector<double> w(m, 0.0);
    w[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < next; ++j) {
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += w[i] * u(i, j);
        for (std::size_t i = 0; i < m; ++i) w[i] -= d * u(i, j);
      }
    }
    double nw = 0.0;
    for (double x : w) nw += x * x;
    nw = std::sqrt(nw);
    if (nw < 0.5) continue;  // basis vector nearly in the current span
    for (std::size_t i = 0; i < m; ++i) u(i, next) = w[i] / nw;
    ++next;
  }
}

// Thin SVD of a tall-or-square matrix via the small Gram matrix: diagonalize
// X^T X, then recover singular values and left vectors as s_i = |X v_i|,
// u_i = X v_i / s_i. Columns past the numerical rank are completed to an
// arbitrary orthonormal basis.
inline SvdResult thin_svd_tall(const DenseMatrix& x) {
  const std::size_t m = x.rows(), n = x.cols();
  DenseMatrix g = gram(x);
  DenseMatrix q;
  jacobi_eigh(g, q);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return g(a, a) > g(b, b); });

  SvdResult res;
  res.u = DenseMatrix(m, n);
  res.v = DenseMatrix(n, n);
  res.s.assign(n, 0.0);
  std::vector<double> w(m);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    for (std::size_t i = 0; i < n; ++i) res.v(i, k) = q(i, j);
    for (std::size_t i = 0; i < m; ++i) {
      const double* xi = x.row(i);
      double s = 0.0;
      for (std::size_t l = 0; l < n; ++l) s += xi[l] * res.v(l, k);
      w[i] = s;
    }
    double nw = 0.0;
    for (double v : w) nw += v * v;
    res.s[k] = std::sqrt(nw);
    if (res.s[k] > 0.0)
      for (std::size_t i = 0; i < m; ++i) res.u(i, k) = w[i] / res.s[k];
  }
  // recomputing s from X may perturb the ordering near ties; restore it
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t j = k; j > 0 && res.s[j] > res.s[j - 1]; --j) {
      std::swap(res.s[j], res.s[j - 1]);
      for (std::size_t i = 0; i < m; ++i) std::swap(res.u(i, j), res.u(i, j - 1));
      for (std::size_t i = 0; i < n; ++i) std::swap(res.v(i, j), res.v(i, j - 1));
    }
  }
  const double cutoff = 1e-12 * (res.s.empty() ? 0.0 : res.s[0]);
  std::size_t rank = 0;
  while (rank < n && res.s[rank] > cutoff) ++rank;
  if (rank < n) {
    for (std::size_t k = rank; k < n; ++k)
      for (std::size_t i = 0; i < m; ++i) res.u(i, k) = 0.0;
    complete_orthonormal(res.u, rank);
  }
  return res;
}

}  // namespace detail

inline SvdResult thin_svd(const DenseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0)
    throw InvalidDimensions("thin_svd of empty matrix");
  require_finite(x, "thin_svd");
  if (x.rows() >= x.cols()) return detail::thin_svd_tall(x);
  SvdResult t = detail::thin_svd_tall(transpose(x));
  std::swap(t.u, t.v);
  return t;
}

// sum of singular values
inline double nuclear_norm(const DenseMatrix& x) {
  SvdResult r = thin_svd(x);
  double s = 0.0;
  for (double v : r.s) s += v;
  return s;
}

struct ShrinkResult {
  DenseMatrix x;          // U * diag(max(s - nu, 0)) * V^T
  std::vector<double> s;  // the shrunk singular values
};

// Singular value shrinkage: subtract nu from every singular value, clamping
// at zero. The shrunk values are returned too since callers typically also
// need the nuclear norm of the result.
inline ShrinkResult shrink_singular_full(const DenseMatrix& x, double nu) {
  if (!(nu >= 0.0)) throw InvalidParameter("shrink_singular: nu must be >= 0");
  SvdResult svd = thin_svd(x);
  ShrinkResult out;
  out.s.resize(svd.s.size());
  for (std::size_t i = 0; i < svd.s.size(); ++i)
    out.s[i] = std::max(svd.s[i] - nu, 0.0);
  const std::size_t m = x.rows(), n = x.cols(), t = out.s.size();
  out.x = DenseMatrix(m, n);
  for (std::size_t k = 0; k < t; ++k) {
    const double sk = out.s[k];
    if (sk == 0.0) continue;
    for (std::size_t i = 0; i < m; ++i) {
      const double us = svd.u(i, k) * sk;
      double* oi = out.x.row(i);
      for (std::size_t j = 0; j < n; ++j) oi[j] += us * svd.v(j, k);
    }
  }
  return out;
}

inline DenseMatrix shrink_singular(const DenseMatrix& x, double nu) {
  return shrink_singular_full(x, nu).x;
}

// Largest squared singular value, by power iteration on the Gram matrix from
// a fixed normalized all-ones start (deterministic). Falls back to the full
// decomposition if the iteration fails to settle.
inline double spectral_norm_sq(const DenseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0)
    throw InvalidDimensions("spectral_norm_sq of empty matrix");
  require_finite(x, "spectral_norm_sq");
  const std::size_t n = x.cols();
  if (frob_sq(x) == 0.0) return 0.0;
  DenseMatrix g = gram(x);
  std::vector<double> q(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> w(n);
  auto rayleigh = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double gi = 0.0;
      for (std::size_t j = 0; j < n; ++j) gi += g(i, j) * q[j];
      w[i] = gi;
      s += q[i] * gi;
    }
    return s;
  };
  double lam = rayleigh();
  for (int it = 0; it < 500; ++it) {
    double nw = 0.0;
    for (double v : w) nw += v * v;
    nw = std::sqrt(nw);
    if (nw == 0.0) break;  // start vector lies in the null space
    for (std::size_t i = 0; i < n; ++i) q[i] = w[i] / nw;
    const double lam_next = rayleigh();
    if (std::abs(lam_next - lam) <= 1e-10 * std::max(std::abs(lam_next), 1e-300)) {
      // confirm it is an eigenpair, not a stalled iteration
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = w[i] - lam_next * q[i];
        res += d * d;
      }
      if (std::sqrt(res) <= 1e-8 * std::max(std::abs(lam_next), 1e-300))
        return lam_next;
    }
    lam = lam_next;
  }
  SvdResult svd = thin_svd(x);
  return svd.s.empty() ? 0.0 : svd.s[0] * svd.s[0];
}

}  // namespace naum

#endif
