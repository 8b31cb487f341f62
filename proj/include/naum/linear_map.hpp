#ifndef NAUM_LINEAR_MAP_HPP
#define NAUM_LINEAR_MAP_HPP

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dense_matrix.hpp"
#include "errors.hpp"

namespace naum {

// Set of observed positions, kept sorted lexicographically by (row, col).
struct SamplingPattern {
  std::size_t m = 0, n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;

  std::size_t count() const { return entries.size(); }

  void validate() const {
    for (std::size_t t = 0; t < entries.size(); ++t) {
      const auto& e = entries[t];
      if (e.first >= m || e.second >= n)
        throw InvalidData("sampling pattern entry out of range");
      if (t > 0 && !(entries[t - 1] < e))
        throw InvalidData("sampling pattern entries must be sorted and unique");
    }
  }
};

// The measurement operator: either "look at every entry" (vectorization in
// row-major order) or "look at the entries listed in a sampling pattern".
// Both satisfy apply(adjoint(v)) == v.
struct LinearMap {
  enum class Kind { Identity, Sampling };

  Kind kind = Kind::Identity;
  std::size_t m = 0, n = 0;
  SamplingPattern pattern;

  static LinearMap identity(std::size_t m, std::size_t n) {
    LinearMap map;
    map.kind = Kind::Identity;
    map.m = m;
    map.n = n;
    return map;
  }

  static LinearMap sampling(SamplingPattern p) {
    p.validate();
    LinearMap map;
    map.kind = Kind::Sampling;
    map.m = p.m;
    map.n = p.n;
    map.pattern = std::move(p);
    return map;
  }

  // length of the measurement vector
  std::size_t q() const {
    return kind == Kind::Identity ? m * n : pattern.count();
  }
};

inline std::vector<double> apply(const LinearMap& map, const DenseMatrix& x) {
  if (x.rows() != map.m || x.cols() != map.n)
    throw InvalidDimensions("apply: matrix is " + shape_str(x) + ", map expects " +
                            std::to_string(map.m) + "x" + std::to_string(map.n));
  std::vector<double> out;
  if (map.kind == LinearMap::Kind::Identity) {
    out.assign(x.data(), x.data() + x.size());
  } else {
    out.reserve(map.pattern.count());
    for (const auto& e : map.pattern.entries) out.push_back(x(e.first, e.second));
  }
  return out;
}

inline DenseMatrix adjoint(const LinearMap& map, const std::vector<double>& v) {
  if (v.size() != map.q())
    throw InvalidDimensions("adjoint: vector length " + std::to_string(v.size()) +
                            ", map expects " + std::to_string(map.q()));
  DenseMatrix out(map.m, map.n);
  if (map.kind == LinearMap::Kind::Identity) {
    std::copy(v.begin(), v.end(), out.data());
  } else {
    for (std::size_t t = 0; t < v.size(); ++t) {
      const auto& e = map.pattern.entries[t];
      out(e.first, e.second) = v[t];
    }
  }
  return out;
}

}  // namespace naum

#endif
