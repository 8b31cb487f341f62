#ifndef NAUM_PROX_HPP
#define NAUM_PROX_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>

#include "dense_matrix.hpp"
#include "errors.hpp"
#include "svd.hpp"

namespace naum {

enum class ProxKind { Zero, Box, ScaledNuclear, ScaledL1 };

// A regularizer with an exact proximal map:
//   prox(t, V) = argmin_W  g(W) + (1 / 2t) |W - V|_F^2.
// Box bounds may be uniform scalars or full matrices.
class ProxOracle {
 public:
  using Bound = std::variant<double, DenseMatrix>;

  static ProxOracle zero() { return ProxOracle(ProxKind::Zero); }

  static ProxOracle box(Bound lower, Bound upper) {
    ProxOracle p(ProxKind::Box);
    p.lower_ = std::move(lower);
    p.upper_ = std::move(upper);
    p.check_bounds();
    return p;
  }

  static ProxOracle scaled_nuclear(double weight) {
    if (!(weight >= 0.0))
      throw InvalidParameter("scaled_nuclear: weight must be >= 0");
    ProxOracle p(ProxKind::ScaledNuclear);
    p.weight_ = weight;
    return p;
  }

  static ProxOracle scaled_l1(double weight) {
    if (!(weight >= 0.0)) throw InvalidParameter("scaled_l1: weight must be >= 0");
    ProxOracle p(ProxKind::ScaledL1);
    p.weight_ = weight;
    return p;
  }

  ProxKind kind() const { return kind_; }
  double weight() const { return weight_; }

  // Whether g splits as a sum over matrix columns (everything but the
  // nuclear norm does), which the column-cycling update scheme requires.
  bool column_separable() const { return kind_ != ProxKind::ScaledNuclear; }

  double lower_at(std::size_t i, std::size_t j) const { return bound_at(lower_, i, j); }
  double upper_at(std::size_t i, std::size_t j) const { return bound_at(upper_, i, j); }

  // g(X); +inf outside the box.
  double eval(const DenseMatrix& x) const {
    switch (kind_) {
      case ProxKind::Zero:
        return 0.0;
      case ProxKind::Box: {
        check_bound_shape(lower_, x, "ProxOracle::eval lower bound");
        check_bound_shape(upper_, x, "ProxOracle::eval upper bound");
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j)
            if (x(i, j) < lower_at(i, j) || x(i, j) > upper_at(i, j))
              return std::numeric_limits<double>::infinity();
        return 0.0;
      }
      case ProxKind::ScaledNuclear:
        return weight_ * nuclear_norm(x);
      case ProxKind::ScaledL1: {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x.data()[i]);
        return weight_ * s;
      }
    }
    return 0.0;
  }

  DenseMatrix prox(double t, const DenseMatrix& v) const {
    if (!(t > 0.0)) throw InvalidParameter("prox: step t must be > 0");
    switch (kind_) {
      case ProxKind::Zero:
        return v;
      case ProxKind::Box: {
        check_bound_shape(lower_, v, "ProxOracle::prox lower bound");
        check_bound_shape(upper_, v, "ProxOracle::prox upper bound");
        DenseMatrix out = v;
        for (std::size_t i = 0; i < v.rows(); ++i)
          for (std::size_t j = 0; j < v.cols(); ++j)
            out(i, j) = std::clamp(v(i, j), lower_at(i, j), upper_at(i, j));
        return out;
      }
      case ProxKind::ScaledNuclear:
        return shrink_singular(v, t * weight_);
      case ProxKind::ScaledL1: {
        DenseMatrix out = v;
        const double thr = t * weight_;
        for (std::size_t i = 0; i < out.size(); ++i) {
          const double a = out.data()[i];
          out.data()[i] = a > thr ? a - thr : (a < -thr ? a + thr : 0.0);
        }
        return out;
      }
    }
    return v;
  }

  // Scalar prox for one entry at position (i, j); only valid for
  // column-separable kinds.
  double prox_entry(double t, double value, std::size_t i, std::size_t j) const {
    switch (kind_) {
      case ProxKind::Zero:
        return value;
      case ProxKind::Box:
        return std::clamp(value, lower_at(i, j), upper_at(i, j));
      case ProxKind::ScaledL1: {
        const double thr = t * weight_;
        return value > thr ? value - thr : (value < -thr ? value + thr : 0.0);
      }
      case ProxKind::ScaledNuclear:
        break;
    }
    throw UnsupportedScheme("prox_entry: regularizer is not column separable");
  }

 private:
  explicit ProxOracle(ProxKind k) : kind_(k) {}

  static double bound_at(const Bound& b, std::size_t i, std::size_t j) {
    if (std::holds_alternative<double>(b)) return std::get<double>(b);
    return std::get<DenseMatrix>(b)(i, j);
  }

  static void check_bound_shape(const Bound& b, const DenseMatrix& x, const char* where) {
    if (std::holds_alternative<DenseMatrix>(b))
      require_same_shape(std::get<DenseMatrix>(b), x, where);
  }

  void check_bounds() const {
    if (std::holds_alternative<double>(lower_) && std::holds_alternative<double>(upper_)) {
      if (!(std::get<double>(lower_) <= std::get<double>(upper_)))
        throw InvalidParameter("box: lower bound exceeds upper bound");
      return;
    }
    if (std::holds_alternative<DenseMatrix>(lower_) &&
        std::holds_alternative<DenseMatrix>(upper_))
      require_same_shape(std::get<DenseMatrix>(lower_), std::get<DenseMatrix>(upper_),
                         "box bounds");
    const DenseMatrix& shaped = std::holds_alternative<DenseMatrix>(lower_)
                                    ? std::get<DenseMatrix>(lower_)
                                    : std::get<DenseMatrix>(upper_);
    for (std::size_t i = 0; i < shaped.rows(); ++i)
      for (std::size_t j = 0; j < shaped.cols(); ++j)
        if (!(lower_at(i, j) <= upper_at(i, j)))
          throw InvalidParameter("box: lower bound exceeds upper bound");
  }

  ProxKind kind_;
  Bound lower_ = 0.0, upper_ = 0.0;
  double weight_ = 0.0;
};

}  // namespace naum

#endif
