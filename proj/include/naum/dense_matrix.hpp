#ifndef NAUM_DENSE_MATRIX_HPP
#define NAUM_DENSE_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace naum {

// Dense row-major matrix of doubles. All shape requirements are checked
// explicitly; there is no implicit broadcasting anywhere in this library.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_)
        throw InvalidDimensions("ragged initializer for DenseMatrix");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                               const char* where) {
  if (!a.same_shape(b))
    throw InvalidDimensions(std::string(where) + ": shape mismatch " +
                            shape_str(a) + " vs " + shape_str(b));
}

inline void require_finite(const DenseMatrix& m, const char* where) {
  if (!m.all_finite())
    throw NonFiniteInput(std::string(where) + ": non-finite entry");
}

// C = A * B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw InvalidDimensions("matmul: " + shape_str(a) + " * " + shape_str(b));
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B
inline DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows())
    throw InvalidDimensions("matmul_at_b: " + shape_str(a) + " vs " + shape_str(b));
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      double* ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// C = A * B^T
inline DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols())
    throw InvalidDimensions("matmul_a_bt: " + shape_str(a) + " vs " + shape_str(b));
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

// A^T A
inline DenseMatrix gram(const DenseMatrix& a) { return matmul_at_b(a, a); }

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "operator+");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
  return c;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "operator-");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
  return c;
}

inline DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
  return c;
}

// sum_ij A_ij * B_ij
inline double dot(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

inline double frob_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return s;
}

inline double frob(const DenseMatrix& a) { return std::sqrt(frob_sq(a)); }

inline double trace(const DenseMatrix& a) {
  if (a.rows() != a.cols())
    throw InvalidDimensions("trace of non-square " + shape_str(a));
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, i);
  return s;
}

// trace(A * B) for square A, B of equal size, without forming the product.
inline double trace_of_product(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.cols() || a.cols() != b.rows())
    throw InvalidDimensions("trace_of_product: " + shape_str(a) + " vs " + shape_str(b));
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * b(j, i);
  return s;
}

// Max |A_ij - B_ij|.
inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

// Solves X * A = B for symmetric positive definite A (n x n), B is m x n.
// Used for the ridge-type subproblem solves; A is overwritten internally.
inline DenseMatrix solve_spd_right(DenseMatrix a, const DenseMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw InvalidDimensions("solve_spd_right: A not square");
  if (b.cols() != n)
    throw InvalidDimensions("solve_spd_right: " + shape_str(b) + " vs " + shape_str(a));
  // in-place lower Cholesky A = L L^T
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0))
      throw InvalidParameter("solve_spd_right: matrix not positive definite");
    d = std::sqrt(d);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / d;
    }
  }
  // each row x of X solves A x^T = b^T (A symmetric): forward then back substitution
  DenseMatrix x = b;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double* xr = x.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      double s = xr[i];
      for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * xr[k];
      xr[i] = s / a(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = xr[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * xr[k];
      xr[ii] = s / a(ii, ii);
    }
  }
  return x;
}

}  // namespace naum

#endif
