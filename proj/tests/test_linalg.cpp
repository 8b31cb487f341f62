#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <naum/dense_matrix.hpp>
#include <naum/io.hpp>
#include <naum/linear_map.hpp>
#include <naum/prox.hpp>
#include <naum/rng.hpp>
#include <naum/sparse_matrix.hpp>
#include <naum/svd.hpp>

#include "test_helpers.hpp"

using namespace naum;
using naum::testing::uniform_matrix;

namespace {

Eigen::MatrixXd to_eigen(const DenseMatrix& a) {
  Eigen::MatrixXd e(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) e(i, j) = a(i, j);
  return e;
}

DenseMatrix from_eigen(const Eigen::MatrixXd& e) {
  DenseMatrix a(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      a(i, j) = e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return a;
}

DenseMatrix eigen_shrink(const DenseMatrix& a, double nu) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a),
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - nu, 0.0);
  return from_eigen(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
}

std::filesystem::path temp_file(const char* stem) {
  return std::filesystem::temp_directory_path() /
         (std::string("naum_test_") + stem + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST_CASE("dense matrix products match a reference implementation") {
  const DenseMatrix a = uniform_matrix(7, 5, CounterRng(1));
  const DenseMatrix b = uniform_matrix(5, 4, CounterRng(2));
  const DenseMatrix c = uniform_matrix(7, 4, CounterRng(3));

  CHECK(max_abs_diff(matmul(a, b), from_eigen(to_eigen(a) * to_eigen(b))) < 1e-14);
  CHECK(max_abs_diff(matmul_at_b(a, c), from_eigen(to_eigen(a).transpose() * to_eigen(c))) <
        1e-14);
  CHECK(max_abs_diff(matmul_a_bt(a, transpose(b)),
                     from_eigen(to_eigen(a) * to_eigen(b))) < 1e-14);
  CHECK(max_abs_diff(gram(a), from_eigen(to_eigen(a).transpose() * to_eigen(a))) < 1e-14);

  CHECK_THROWS_AS(matmul(a, c), InvalidDimensions);
  CHECK_THROWS_AS(a + b, InvalidDimensions);
  CHECK(trace_of_product(gram(a), gram(a)) ==
        Catch::Approx((to_eigen(a).transpose() * to_eigen(a)).squaredNorm()));
}

TEST_CASE("dense matrix scalar helpers") {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = -2.0;
  a(1, 0) = 3.0;
  a(1, 1) = 4.0;
  CHECK(frob_sq(a) == 30.0);
  CHECK(trace(a) == 5.0);
  CHECK(dot(a, a) == 30.0);
  const DenseMatrix s = 2.0 * a;
  CHECK(s(1, 0) == 6.0);
  DenseMatrix nan = a;
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(require_finite(nan, "test"), NonFiniteInput);
}

TEST_CASE("right-sided positive definite solve") {
  const DenseMatrix g = uniform_matrix(4, 4, CounterRng(5));
  DenseMatrix a = gram(g);
  for (std::size_t i = 0; i < 4; ++i) a(i, i) += 1.0;
  const DenseMatrix b = uniform_matrix(6, 4, CounterRng(6));
  const DenseMatrix x = solve_spd_right(a, b);
  CHECK(max_abs_diff(matmul(x, a), b) < 1e-10);

  DenseMatrix indef = DenseMatrix::identity(3);
  indef(2, 2) = -1.0;
  CHECK_THROWS_AS(solve_spd_right(indef, DenseMatrix(2, 3)), InvalidParameter);
}

TEST_CASE("sparse matrix construction and products") {
  // unsorted triples are fine; duplicates and out-of-range entries are not
  std::vector<std::tuple<std::uint64_t, std::uint64_t, double>> t = {
      {1, 1, 4.0}, {0, 2, 3.0}, {0, 0, 1.0}};
  const SparseMatrix sp(2, 3, t);
  CHECK(sp.nnz() == 3);
  const DenseMatrix d = sp.to_dense();
  CHECK(d(0, 0) == 1.0);
  CHECK(d(0, 2) == 3.0);
  CHECK(d(1, 1) == 4.0);
  CHECK(d(1, 0) == 0.0);
  CHECK(sp.frob_sq() == 26.0);
  CHECK(sp.min_value() == 0.0);  // reports the smallest stored-or-implicit value

  const DenseMatrix b = uniform_matrix(3, 2, CounterRng(7));
  CHECK(max_abs_diff(matmul(sp, b), matmul(d, b)) < 1e-14);
  const DenseMatrix c = uniform_matrix(2, 2, CounterRng(8));
  CHECK(max_abs_diff(matmul_at_b(sp, c), matmul_at_b(d, c)) < 1e-14);

  auto dup = t;
  dup.push_back({0, 0, 9.0});
  CHECK_THROWS_AS(SparseMatrix(2, 3, dup), InvalidData);
  auto oob = t;
  oob.push_back({2, 0, 1.0});
  CHECK_THROWS_AS(SparseMatrix(2, 3, oob), InvalidData);
}

TEST_CASE("linear maps: adjoint composed with apply is the identity on range") {
  const std::size_t m = 6, n = 5;
  SECTION("identity map") {
    const LinearMap map = LinearMap::identity(m, n);
    CHECK(map.q() == m * n);
    const DenseMatrix x = uniform_matrix(m, n, CounterRng(9));
    const std::vector<double> v = apply(map, x);
    CHECK(max_abs_diff(adjoint(map, v), x) == 0.0);
  }
  SECTION("sampling map") {
    SamplingPattern pat;
    pat.m = m;
    pat.n = n;
    pat.entries = {{0, 1}, {2, 4}, {5, 0}};
    const LinearMap map = LinearMap::sampling(pat);
    CHECK(map.q() == 3);
    std::vector<double> v = {1.5, -2.0, 7.0};
    CHECK(apply(map, adjoint(map, v)) == v);
    // off-pattern entries of the adjoint are zero
    const DenseMatrix back = adjoint(map, v);
    CHECK(back(0, 0) == 0.0);
    CHECK(back(2, 4) == -2.0);
  }
  SECTION("pattern validation") {
    SamplingPattern bad;
    bad.m = 2;
    bad.n = 2;
    bad.entries = {{1, 1}, {0, 0}};  // out of order
    CHECK_THROWS_AS(bad.validate(), InvalidData);
    bad.entries = {{0, 0}, {0, 2}};  // column out of range
    CHECK_THROWS_AS(bad.validate(), InvalidData);
  }
}

TEST_CASE("thin svd agrees with a reference decomposition") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t m = 4 + seed % 5, n = 3 + (seed * 7) % 5;
    const DenseMatrix a = uniform_matrix(m, n, CounterRng(100 + seed));
    const SvdResult r = thin_svd(a);
    Eigen::JacobiSVD<Eigen::MatrixXd> ref(to_eigen(a));
    const Eigen::VectorXd s = ref.singularValues();
    REQUIRE(r.s.size() == static_cast<std::size_t>(s.size()));
    for (std::size_t i = 0; i < r.s.size(); ++i)
      CHECK(std::abs(r.s[i] - s[static_cast<Eigen::Index>(i)]) < 1e-10);
    // reconstruction and orthonormality
    DenseMatrix us = r.u;
    for (std::size_t j = 0; j < r.s.size(); ++j)
      for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= r.s[j];
    CHECK(max_abs_diff(matmul_a_bt(us, r.v), a) < 1e-10 * std::max(1.0, frob(a)));
    CHECK(max_abs_diff(gram(r.u), DenseMatrix::identity(r.u.cols())) < 1e-10);
    CHECK(max_abs_diff(gram(r.v), DenseMatrix::identity(r.v.cols())) < 1e-10);
  }
}

TEST_CASE("thin svd of rank-deficient input keeps an orthonormal basis") {
  DenseMatrix a = uniform_matrix(8, 2, CounterRng(11));
  DenseMatrix b(8, 5);
  for (std::size_t i = 0; i < 8; ++i) {
    b(i, 0) = a(i, 0);
    b(i, 1) = a(i, 1);
    b(i, 2) = a(i, 0) + a(i, 1);  // dependent columns
    b(i, 3) = 2.0 * a(i, 0);
    b(i, 4) = a(i, 1) - a(i, 0);
  }
  const SvdResult r = thin_svd(b);
  CHECK(r.s[2] < 1e-10);
  CHECK(max_abs_diff(gram(r.u), DenseMatrix::identity(5)) < 1e-9);
  DenseMatrix us = r.u;
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 8; ++i) us(i, j) *= r.s[j];
  CHECK(max_abs_diff(matmul_a_bt(us, r.v), b) < 1e-9 * frob(b));
}

TEST_CASE("singular value shrinkage matches the reference") {
  SECTION("diagonal hand value") {
    DenseMatrix d(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const DenseMatrix s = shrink_singular(d, 2.0);
    CHECK(s(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(s(1, 1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(std::abs(s(0, 1)) + std::abs(s(1, 0)) < 1e-12);
  }
  SECTION("random instances at several thresholds") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const DenseMatrix a = uniform_matrix(6, 4, CounterRng(200 + seed));
      const double s1 = std::sqrt(spectral_norm_sq(a));
      for (double nu : {0.0, 0.5, s1 + 1.0}) {
        CHECK(max_abs_diff(shrink_singular(a, nu), eigen_shrink(a, nu)) < 1e-10);
      }
    }
  }
  SECTION("shrunk values power the nuclear norm") {
    const DenseMatrix a = uniform_matrix(5, 5, CounterRng(33));
    const ShrinkResult r = shrink_singular_full(a, 0.3);
    double nn = 0.0;
    for (double v : r.s) nn += v;
    CHECK(nn == Catch::Approx(nuclear_norm(r.x)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(shrink_singular(DenseMatrix(2, 2), -1.0), InvalidParameter);
}

TEST_CASE("nuclear and spectral norms") {
  const DenseMatrix a = uniform_matrix(7, 4, CounterRng(13));
  Eigen::JacobiSVD<Eigen::MatrixXd> ref(to_eigen(a));
  CHECK(nuclear_norm(a) == Catch::Approx(ref.singularValues().sum()).epsilon(1e-12));
  CHECK(spectral_norm_sq(a) ==
        Catch::Approx(ref.singularValues()[0] * ref.singularValues()[0]).epsilon(1e-9));
  CHECK(spectral_norm_sq(DenseMatrix(3, 2)) == 0.0);
  // rank one: |u|^2 |v|^2
  DenseMatrix u(3, 1), v(2, 1);
  u(0, 0) = 1.0;
  u(1, 0) = 2.0;
  u(2, 0) = 2.0;
  v(0, 0) = 3.0;
  v(1, 0) = 4.0;
  CHECK(spectral_norm_sq(matmul_a_bt(u, v)) == Catch::Approx(9.0 * 25.0).epsilon(1e-10));
}

TEST_CASE("prox oracles return exact minimizers") {
  SECTION("box clamp hand value") {
    const ProxOracle box = ProxOracle::box(0.0, 10.0);
    DenseMatrix v(2, 2);
    v(0, 0) = -1.0;
    v(0, 1) = 5.0;
    v(1, 0) = 12.0;
    v(1, 1) = 0.0;
    const DenseMatrix p = box.prox(1.0, v);
    CHECK(p(0, 0) == 0.0);
    CHECK(p(0, 1) == 5.0);
    CHECK(p(1, 0) == 10.0);
    CHECK(p(1, 1) == 0.0);
    CHECK(box.eval(p) == 0.0);
    CHECK(box.eval(v) == std::numeric_limits<double>::infinity());
  }
  SECTION("scaled nuclear prox is singular value shrinkage") {
    DenseMatrix d(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    const ProxOracle nuc = ProxOracle::scaled_nuclear(1.0);
    const DenseMatrix p = nuc.prox(2.0, d);  // threshold t * weight = 2
    CHECK(p(0, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(p(1, 1) == Catch::Approx(0.0).margin(1e-12));
    CHECK(nuc.eval(d) == Catch::Approx(4.0).epsilon(1e-12));
    CHECK_FALSE(nuc.column_separable());
    CHECK_THROWS_AS(nuc.prox_entry(1.0, 2.0, 0, 0), UnsupportedScheme);
  }
  SECTION("grid search confirms the scalar proximal points") {
    // argmin g(w) + (1/2t) (w - v)^2 compared against a fine grid
    CounterRng rng(41);
    for (int it = 0; it < 20; ++it) {
      const double v = 4.0 * rng.uniform() - 2.0;
      const double t = 0.1 + 2.0 * rng.uniform();
      const ProxOracle l1 = ProxOracle::scaled_l1(0.7);
      const ProxOracle box = ProxOracle::box(-0.5, 0.8);
      DenseMatrix vm(1, 1);
      vm(0, 0) = v;
      const double pl1 = l1.prox(t, vm)(0, 0);
      const double pbox = box.prox(t, vm)(0, 0);
      auto obj = [&](const ProxOracle& g, double w) {
        DenseMatrix wm(1, 1);
        wm(0, 0) = w;
        return g.eval(wm) + (w - v) * (w - v) / (2.0 * t);
      };
      for (double w = -2.5; w <= 2.5; w += 1e-3) {
        if (std::isfinite(obj(l1, w))) CHECK(obj(l1, pl1) <= obj(l1, w) + 1e-9);
        if (std::isfinite(obj(box, w))) CHECK(obj(box, pbox) <= obj(box, w) + 1e-9);
      }
      CHECK(l1.prox_entry(t, v, 0, 0) == pl1);
      CHECK(box.prox_entry(t, v, 0, 0) == pbox);
    }
  }
  SECTION("bound validation") {
    CHECK_THROWS_AS(ProxOracle::box(2.0, 1.0), InvalidParameter);
    DenseMatrix lo(2, 2), hi(2, 2);
    hi(0, 0) = -1.0;  // below the scalar lower bound at one entry
    CHECK_THROWS_AS(ProxOracle::box(0.0, hi), InvalidParameter);
    lo(1, 1) = 0.5;
    CHECK_NOTHROW(ProxOracle::box(lo, 1.0));
    CHECK_THROWS_AS(ProxOracle::zero().prox(0.0, DenseMatrix(1, 1)), InvalidParameter);
    CHECK_THROWS_AS(ProxOracle::scaled_nuclear(-1.0), InvalidParameter);
  }
}

TEST_CASE("counter rng streams") {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    CHECK(va != c.next_u64());
  }
  CounterRng root(7);
  CounterRng s1 = root.split(1), s2 = root.split(2);
  CHECK(s1.next_u64() != s2.next_u64());

  CounterRng u(11);
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    mean += x;
  }
  CHECK(std::abs(mean / 10000 - 0.5) < 0.02);

  CounterRng w(12);
  for (int i = 0; i < 1000; ++i) CHECK(w.below(7) < 7);

  // quantile spot values and moments of the normal sampler
  CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
  CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(2e-6));
  CHECK(normal_quantile(0.025) == Catch::Approx(-1.959963984540054).margin(2e-6));
  CounterRng g(13);
  double m1 = 0.0, m2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal();
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 0.03);
  CHECK(std::abs(std::sqrt(m2 - m1 * m1) - 1.0) < 0.03);
}

TEST_CASE("dense csv round trip") {
  const auto path = temp_file("csv").string() + ".csv";
  const DenseMatrix a = uniform_matrix(5, 3, CounterRng(21));
  save_dense_csv(path, a);
  const DenseMatrix b = load_dense_csv(path);
  CHECK(max_abs_diff(a, b) == 0.0);  // %.17g survives the trip exactly

  std::ofstream bad(path);
  bad << "1,2\n3\n";
  bad.close();
  try {
    load_dense_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);  // line number
  }
  std::filesystem::remove(path);
}

TEST_CASE("dense binary round trip is bitwise") {
  const auto path = temp_file("bin").string() + ".mat";
  const DenseMatrix a = uniform_matrix(4, 6, CounterRng(22));
  save_dense_binary(path, a);
  const DenseMatrix b = load_dense_binary(path);
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.data()[i] == b.data()[i]);

  std::ofstream bad(path, std::ios::binary);
  bad << "NOTMAGIC";
  bad.close();
  CHECK_THROWS_AS(load_dense_binary(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("sparse coordinate files") {
  const auto path = temp_file("coord").string() + ".mtx";
  {
    std::ofstream f(path);
    f << "% a comment line\n2 2 2\n1 1 5.0\n2 2 -1.5\n";
  }
  const SparseMatrix sp = load_sparse_coordinate(path);
  CHECK(sp.rows() == 2);
  CHECK(sp.nnz() == 2);
  CHECK(sp.to_dense()(0, 0) == 5.0);
  CHECK(sp.to_dense()(1, 1) == -1.5);

  {
    std::ofstream f(path);
    f << "2 2 2\n1 1 1.0\n1 1 2.0\n";  // duplicate entry
  }
  CHECK_THROWS_AS(load_sparse_coordinate(path), ParseError);
  {
    std::ofstream f(path);
    f << "2 2 1\n3 1 1.0\n";  // row out of range
  }
  CHECK_THROWS_AS(load_sparse_coordinate(path), ParseError);

  CHECK_THROWS_AS(parse_format("mystery"), InvalidParameter);
  CHECK(parse_format("dense-binary") == MatrixFormat::DenseBinary);
  std::filesystem::remove(path);
}

TEST_CASE("trace csv round trip") {
  Trace tr;
  tr.initial_objective = 10.5;
  for (int k = 1; k <= 3; ++k) {
    IterRecord r;
    r.k = static_cast<std::size_t>(k);
    r.objective = 10.0 / k;
    r.seconds = 0.001 * k;
    r.mu = 1.0 + k;
    r.sigma = 2.0 + k;
    r.inner_iters = k;
    r.dx = 0.1 * k;
    r.dy = 0.2 * k;
    tr.records.push_back(r);
  }
  const auto path = temp_file("trace").string() + ".csv";
  write_trace_csv(path, tr);
  const Trace back = load_trace_csv(path);
  REQUIRE(back.records.size() == 3);
  CHECK(back.initial_objective == tr.initial_objective);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.records[i].k == tr.records[i].k);
    CHECK(back.records[i].objective == tr.records[i].objective);
    CHECK(back.records[i].seconds == tr.records[i].seconds);
    CHECK(back.records[i].mu == tr.records[i].mu);
    CHECK(back.records[i].sigma == tr.records[i].sigma);
    CHECK(back.records[i].inner_iters == tr.records[i].inner_iters);
    CHECK(back.records[i].dx == tr.records[i].dx);
    CHECK(back.records[i].dy == tr.records[i].dy);
  }
  {
    std::ofstream f(path);
    f << "wrong,header\n";
  }
  CHECK_THROWS_AS(load_trace_csv(path), ParseError);
  std::filesystem::remove(path);
}
