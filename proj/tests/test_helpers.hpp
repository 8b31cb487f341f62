#ifndef NAUM_TEST_HELPERS_HPP
#define NAUM_TEST_HELPERS_HPP

#include <naum/bench.hpp>
#include <naum/problem.hpp>
#include <naum/rng.hpp>

namespace naum::testing {

inline DenseMatrix uniform_matrix(std::size_t rows, std::size_t cols, CounterRng rng,
                                  double lo = -1.0, double hi = 1.0) {
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = lo + (hi - lo) * rng.uniform();
  return out;
}

inline DenseMatrix nonneg_matrix(std::size_t rows, std::size_t cols, CounterRng rng) {
  return uniform_matrix(rows, cols, std::move(rng), 0.0, 1.0);
}

// A box-regularized problem on random data, with either the identity map or
// a random sampling pattern ("box" regularizers admit every update scheme).
inline ProblemSpec random_box_spec(std::size_t m, std::size_t n, std::size_t r,
                                   bool sampled, std::uint64_t seed,
                                   double upper = 1e16) {
  CounterRng root(seed);
  ProblemSpec spec;
  spec.m = m;
  spec.n = n;
  spec.r = r;
  spec.psi = ProxOracle::box(0.0, upper);
  spec.phi = ProxOracle::box(0.0, upper);
  if (sampled) {
    spec.map = LinearMap::sampling(sample_mask(m, n, 0.6, seed));
  } else {
    spec.map = LinearMap::identity(m, n);
  }
  spec.b.resize(spec.map.q());
  CounterRng bs = root.split(9);
  for (double& v : spec.b) v = bs.uniform();
  return spec;
}

}  // namespace naum::testing

#endif
