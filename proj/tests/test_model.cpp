#include <catch2/catch_amalgamated.hpp>

#include <naum/params.hpp>
#include <naum/problem.hpp>
#include <naum/rng.hpp>

#include "test_helpers.hpp"

using namespace naum;
using naum::testing::nonneg_matrix;
using naum::testing::random_box_spec;
using naum::testing::uniform_matrix;

TEST_CASE("derived parameter table") {
  struct Row {
    double alpha, beta, gamma, rho;
  };
  const Row table[] = {
      {2.0, 2.0, 0.0, 1.0},          {1.1, 11.0, 0.0, 1.0},
      {0.8, -4.0, 3.2, 1.0},         {0.6, -1.5, 0.9, 1.0},
      {0.5, -1.0, 0.5, 1.0},         {0.4, -2.0 / 3.0, 4.0 / 15.0, 2.25},
      {0.2, -0.25, 0.05, 16.0},
  };
  for (const Row& row : table) {
    CAPTURE(row.alpha);
    const SolverParams p = derive_params(row.alpha);
    CHECK(p.alpha == row.alpha);
    CHECK(p.beta == Catch::Approx(row.beta).epsilon(1e-14));
    CHECK(p.gamma == Catch::Approx(row.gamma).margin(1e-14).epsilon(1e-14));
    CHECK(p.rho == Catch::Approx(row.rho).epsilon(1e-14));
    CHECK_NOTHROW(p.validate());
    // the two identities the table is built from
    CHECK(1.0 / p.alpha + 1.0 / p.beta == Catch::Approx(1.0).margin(1e-14));
    const double apb = p.alpha + p.beta;
    CHECK(p.gamma == std::max({0.0, -p.alpha, -apb}));
    CHECK(p.rho == std::max(1.0, (p.alpha / apb) * (p.alpha / apb)));
  }
}

TEST_CASE("parameter validation rejects inconsistent settings") {
  CHECK_THROWS_AS(derive_params(0.0), InvalidParameter);
  CHECK_THROWS_AS(derive_params(1.0), InvalidParameter);
  CHECK_THROWS_AS(derive_params(std::numeric_limits<double>::infinity()),
                  InvalidParameter);
  CHECK_THROWS_AS(derive_params(std::nan("")), InvalidParameter);

  SolverParams p = derive_params(2.0);
  SolverParams bad = p;
  bad.beta = 3.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.gamma = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.rho = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.tau = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.c = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.window = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.mu_min = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = p;
  bad.sigma_min = 2.0;
  bad.sigma_max = 1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

namespace {

ProblemSpec scalar_spec(double b) {
  ProblemSpec prob;
  prob.m = prob.n = prob.r = 1;
  prob.map = LinearMap::identity(1, 1);
  prob.b = {b};
  prob.validate();
  return prob;
}

}  // namespace

TEST_CASE("objective hand values") {
  const ProblemSpec prob = scalar_spec(1.0);
  CHECK(objective(prob, DenseMatrix{{2.0}}, DenseMatrix{{1.0}}) == 0.5);
  CHECK(objective(prob, DenseMatrix{{2.0}}, DenseMatrix{{3.0}}) == 12.5);
  CHECK(objective(prob, DenseMatrix{{1.0}}, DenseMatrix{{1.0}}) == 0.0);

  // regularizer contributes additively
  ProblemSpec reg = prob;
  reg.psi = ProxOracle::scaled_l1(2.0);
  CHECK(objective(reg, DenseMatrix{{2.0}}, DenseMatrix{{1.0}}) == 4.5);

  CHECK_THROWS_AS(objective(prob, DenseMatrix(2, 1), DenseMatrix{{1.0}}),
                  InvalidDimensions);
  DenseMatrix bad{{std::nan("")}};
  CHECK_THROWS_AS(objective(prob, bad, DenseMatrix{{1.0}}), NonFiniteInput);
}

TEST_CASE("problem validation") {
  ProblemSpec prob = scalar_spec(1.0);
  prob.b = {1.0, 2.0};
  CHECK_THROWS_AS(prob.validate(), InvalidDimensions);
  prob.b = {std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(prob.validate(), NonFiniteInput);
  prob.b = {1.0};
  prob.m = 0;
  CHECK_THROWS_AS(prob.validate(), InvalidDimensions);
}

TEST_CASE("coupling point hand value and degenerate patterns") {
  SECTION("scalar blend") {
    const ProblemSpec prob = scalar_spec(1.0);
    const SolverParams p = derive_params(2.0);  // beta/(alpha+beta) = 1/2
    const DenseMatrix z =
        z_formula(prob, p, DenseMatrix{{3.0}}, DenseMatrix{{1.0}});
    CHECK(z(0, 0) == 2.0);
  }
  SECTION("empty sampling pattern leaves the product unchanged") {
    ProblemSpec prob;
    prob.m = prob.n = 2;
    prob.r = 1;
    SamplingPattern pat;
    pat.m = pat.n = 2;
    prob.map = LinearMap::sampling(pat);
    prob.validate();
    const DenseMatrix x = uniform_matrix(2, 1, CounterRng(3));
    const DenseMatrix y = uniform_matrix(2, 1, CounterRng(4));
    const SolverParams p = derive_params(0.6);
    CHECK(max_abs_diff(z_formula(prob, p, x, y), matmul_a_bt(x, y)) == 0.0);
  }
  SECTION("identity map blends every entry") {
    ProblemSpec prob;
    prob.m = 2;
    prob.n = 3;
    prob.r = 2;
    prob.map = LinearMap::identity(2, 3);
    CounterRng rng(5);
    prob.b.resize(6);
    for (double& v : prob.b) v = rng.normal();
    prob.validate();
    const DenseMatrix x = uniform_matrix(2, 2, CounterRng(6));
    const DenseMatrix y = uniform_matrix(3, 2, CounterRng(7));
    const SolverParams p = derive_params(0.4);
    const double w = p.beta / (p.alpha + p.beta);
    const DenseMatrix prod = matmul_a_bt(x, y);
    const DenseMatrix z = z_formula(prob, p, x, y);
    std::size_t t = 0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j, ++t)
        CHECK(z(i, j) ==
              Catch::Approx((1.0 - w) * prod(i, j) + w * prob.b[t]).margin(1e-15));
  }
  SECTION("alpha + beta = 0 is rejected") {
    SolverParams p;
    p.alpha = 2.0;
    p.beta = -2.0;
    const ProblemSpec prob = scalar_spec(1.0);
    CHECK_THROWS_AS(z_formula(prob, p, DenseMatrix{{1.0}}, DenseMatrix{{1.0}}),
                    InvalidParameter);
  }
}

TEST_CASE("potential at the coupling point reproduces the objective") {
  const double alphas[] = {0.4, 0.6, 0.8, 1.1, 2.0};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t m = 2 + seed % 19;
    const std::size_t n = 2 + (seed * 3) % 19;
    const std::size_t r = 1 + seed % 5;
    const bool sampled = (seed % 2) == 1;
    const ProblemSpec prob = random_box_spec(m, n, r, sampled, 1000 + seed);
    const DenseMatrix x = nonneg_matrix(m, r, CounterRng(seed).split(1));
    const DenseMatrix y = nonneg_matrix(n, r, CounterRng(seed).split(2));
    const SolverParams p = derive_params(alphas[seed % 5]);
    const double f = objective(prob, x, y);
    const double theta = potential(prob, p, x, y, z_formula(prob, p, x, y));
    CAPTURE(seed, m, n, r, p.alpha, sampled);
    CHECK(std::abs(theta - f) <= 1e-10 * (1.0 + std::abs(f)));
  }
}

TEST_CASE("potential shape and finiteness checks") {
  const ProblemSpec prob = scalar_spec(1.0);
  const SolverParams p = derive_params(2.0);
  CHECK_THROWS_AS(
      potential(prob, p, DenseMatrix{{1.0}}, DenseMatrix{{1.0}}, DenseMatrix(2, 2)),
      InvalidDimensions);
  CHECK_THROWS_AS(potential(prob, p, DenseMatrix{{1.0}}, DenseMatrix{{1.0}},
                            DenseMatrix{{std::nan("")}}),
                  NonFiniteInput);
}

TEST_CASE("residual vector skips unobserved entries") {
  ProblemSpec prob;
  prob.m = 3;
  prob.n = 3;
  prob.r = 2;
  SamplingPattern pat;
  pat.m = pat.n = 3;
  pat.entries = {{0, 0}, {1, 2}, {2, 1}};
  prob.map = LinearMap::sampling(pat);
  prob.b = {1.0, -2.0, 0.5};
  prob.validate();
  const DenseMatrix x = uniform_matrix(3, 2, CounterRng(8));
  const DenseMatrix y = uniform_matrix(3, 2, CounterRng(9));
  const DenseMatrix prod = matmul_a_bt(x, y);
  const std::vector<double> res = residual_vector(prob, x, y);
  REQUIRE(res.size() == 3);
  CHECK(res[0] == Catch::Approx(prod(0, 0) - 1.0).margin(1e-15));
  CHECK(res[1] == Catch::Approx(prod(1, 2) + 2.0).margin(1e-15));
  CHECK(res[2] == Catch::Approx(prod(2, 1) - 0.5).margin(1e-15));
}

TEST_CASE("stationarity residual") {
  SECTION("interior critical point") {
    const ProblemSpec prob = scalar_spec(1.0);
    CHECK(stationarity_residual(prob, DenseMatrix{{1.0}}, DenseMatrix{{1.0}}) == 0.0);
  }
  SECTION("active box face with inward-pointing gradient") {
    ProblemSpec prob = scalar_spec(-1.0);
    prob.psi = ProxOracle::box(0.0, 1.0);
    CHECK(stationarity_residual(prob, DenseMatrix{{0.0}}, DenseMatrix{{1.0}}) == 0.0);
  }
  SECTION("generic point is flagged") {
    const ProblemSpec prob = scalar_spec(1.0);
    CHECK(stationarity_residual(prob, DenseMatrix{{3.0}}, DenseMatrix{{2.0}}) > 0.1);
  }
}
