#ifndef NAUM_SPARSE_MATRIX_HPP
#define NAUM_SPARSE_MATRIX_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <tuple>
#include <vector>

#include "dense_matrix.hpp"
#include "errors.hpp"

namespace naum {

// Compressed sparse rows. Only the handful of products the solvers need.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  // triples need not be sorted; duplicates are rejected.
  SparseMatrix(std::size_t rows, std::size_t cols,
               std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> triples)
      : rows_(rows), cols_(cols) {
    std::sort(triples.begin(), triples.end(),
              [](const auto& a, const auto& b) {
                return std::tie(std::get<0>(a), std::get<1>(a)) <
                       std::tie(std::get<0>(b), std::get<1>(b));
              });
    row_ptr_.assign(rows_ + 1, 0);
    col_.reserve(triples.size());
    val_.reserve(triples.size());
    std::uint64_t prev_r = ~std::uint64_t{0}, prev_c = 0;
    for (const auto& [r, c, v] : triples) {
      if (r >= rows_ || c >= cols_)
        throw InvalidData("sparse entry out of range");
      if (r == prev_r && c == prev_c)
        throw InvalidData("duplicate sparse entry");
      prev_r = r;
      prev_c = c;
      row_ptr_[r + 1]++;
      col_.push_back(static_cast<std::uint32_t>(c));
      val_.push_back(v);
    }
    for (std::size_t i = 0; i < rows_; ++i) row_ptr_[i + 1] += row_ptr_[i];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return val_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_index() const { return col_; }
  const std::vector<double>& values() const { return val_; }

  double frob_sq() const {
    double s = 0.0;
    for (double v : val_) s += v * v;
    return s;
  }

  double min_value() const {
    double m = 0.0;
    for (double v : val_) m = std::min(m, v);
    return m;
  }

  bool all_finite() const {
    for (double v : val_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
        d(i, col_[p]) = val_[p];
    return d;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> val_;
};

// C = M * B  (rows x cols) * (cols x k)
inline DenseMatrix matmul(const SparseMatrix& m, const DenseMatrix& b) {
  if (m.cols() != b.rows())
    throw InvalidDimensions("sparse matmul: inner dimensions disagree");
  DenseMatrix c(m.rows(), b.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double* ci = c.row(i);
    for (std::size_t p = m.row_ptr()[i]; p < m.row_ptr()[i + 1]; ++p) {
      const double v = m.values()[p];
      const double* bj = b.row(m.col_index()[p]);
      for (std::size_t k = 0; k < b.cols(); ++k) ci[k] += v * bj[k];
    }
  }
  return c;
}

// C = M^T * B  (cols x rows) * (rows x k)
inline DenseMatrix matmul_at_b(const SparseMatrix& m, const DenseMatrix& b) {
  if (m.rows() != b.rows())
    throw InvalidDimensions("sparse matmul_at_b: row counts disagree");
  DenseMatrix c(m.cols(), b.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* bi = b.row(i);
    for (std::size_t p = m.row_ptr()[i]; p < m.row_ptr()[i + 1]; ++p) {
      const double v = m.values()[p];
      double* cj = c.row(m.col_index()[p]);
      for (std::size_t k = 0; k < b.cols(); ++k) cj[k] += v * bi[k];
    }
  }
  return c;
}

}  // namespace naum

#endif
