#include <cmath>
#include <string>
#include <utility>

#include <doctest.h>

#include "otseg/errors.hpp"
#include "otseg/sinkhorn.hpp"
#include "support/oracles.hpp"

using namespace otseg;

namespace {

// generous budget: these tests are about the fixed point, not the iteration
// cap, and peaked kernels converge slowly under equipartition
TransportProblem make_problem(Matrix similarity, double lambda) {
  TransportProblem p;
  p.similarity = std::move(similarity);
  p.lambda = lambda;
  p.max_iters = 2000000;
  p.tolerance = 1e-10;
  return p;
}

}  // namespace

TEST_CASE("uniform similarity yields the uniform plan in one iteration") {
  Matrix s(4, 12, 0.25);
  const auto result = sinkhorn_solve(make_problem(s, 25.0));
  CHECK(result.converged);
  CHECK(result.iters_used == 1);
  for (std::size_t i = 0; i < result.plan.size(); ++i)
    CHECK(result.plan.data()[i] == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("2x2 symmetric case matches the high-precision fixed point") {
  Matrix s = Matrix::from_rows({{0.9, 0.1}, {0.1, 0.9}});
  const auto result = sinkhorn_solve(make_problem(s, 1.0));
  CHECK(result.converged);
  const auto oracle = oracles::sinkhorn_fixed_point(s, 1.0);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(result.plan.data()[i] - static_cast<double>(oracle[i])) <
          1e-12);
  // symmetric doubly-stochastic kernel: the plan is the kernel halved
  CHECK(result.plan(0, 0) == doctest::Approx(0.45).epsilon(1e-10));
  CHECK(result.plan(0, 1) == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("converged plans meet both marginals and factor through u,K,v") {
  Rng rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t M = 2 + rng.uniform_index(7);
    const std::size_t N = M + rng.uniform_index(40);
    const double lambda = (trial % 3 == 0) ? 1.0 : (trial % 3 == 1 ? 5.0 : 25.0);
    const Matrix s = oracles::random_similarity(M, N, rng);
    const auto result = sinkhorn_solve(make_problem(s, lambda));
    REQUIRE(result.converged);

    const auto [row_res, col_res] = marginal_residuals(result);
    CHECK(row_res < 1e-8);
    CHECK(col_res < 1e-8);

    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t n = 0; n < N; ++n) {
        const double reconstructed = result.row_scaling[m] *
                                     std::pow(s(m, n), lambda) *
                                     result.col_scaling[n];
        CHECK(std::abs(result.plan(m, n) - reconstructed) < 1e-12);
      }

    const auto oracle = oracles::sinkhorn_fixed_point(s, lambda);
    for (std::size_t i = 0; i < result.plan.size(); ++i)
      CHECK(std::abs(result.plan.data()[i] - static_cast<double>(oracle[i])) <
            1e-9);
  }
}

TEST_CASE("plan entropy is non-increasing in lambda") {
  Rng rng(55);
  const Matrix s = oracles::random_similarity(5, 30, rng, 1.0);
  double prev_entropy = 1e300;
  for (double lambda : {1.0, 5.0, 25.0, 60.0}) {
    const auto result = sinkhorn_solve(make_problem(s, lambda));
    REQUIRE(result.converged);
    double entropy = 0.0;
    for (std::size_t i = 0; i < result.plan.size(); ++i) {
      const double a = result.plan.data()[i];
      if (a > 0.0) entropy -= a * std::log(a);
    }
    CHECK(entropy <= prev_entropy + 1e-9);
    prev_entropy = entropy;
  }
}

TEST_CASE("column permutation permutes the plan and the hardened labels") {
  Rng rng(77);
  const std::size_t M = 4, N = 17;
  const Matrix s = oracles::random_similarity(M, N, rng);
  std::vector<std::size_t> perm(N);
  for (std::size_t n = 0; n < N; ++n) perm[n] = n;
  for (std::size_t i = N; i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  Matrix permuted(M, N);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n) permuted(m, perm[n]) = s(m, n);

  const auto base = sinkhorn_solve(make_problem(s, 25.0));
  const auto shuffled = sinkhorn_solve(make_problem(permuted, 25.0));
  REQUIRE(base.converged);
  REQUIRE(shuffled.converged);
  const auto base_labels = harden(base);
  const auto shuffled_labels = harden(shuffled);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < N; ++n)
      CHECK(std::abs(base.plan(m, n) - shuffled.plan(m, perm[n])) < 1e-10);
  for (std::size_t n = 0; n < N; ++n)
    CHECK(base_labels[n] == shuffled_labels[perm[n]]);
}

TEST_CASE("harden picks the column argmax with lowest-index ties") {
  AssignmentMatrix assignment;
  assignment.plan = Matrix::from_rows({{0.2, 0.5, 0.3},
                                       {0.2, 0.1, 0.3},
                                       {0.1, 0.4, 0.3}});
  const auto labels = harden(assignment);
  CHECK(labels == std::vector<int>{0, 0, 0});
}

TEST_CASE("large lambda pushes the hardened assignment toward column argmax") {
  Rng rng(31);
  const Matrix s = oracles::random_similarity(6, 60, rng, 3.0);
  const auto result = sinkhorn_solve(make_problem(s, 80.0));
  REQUIRE(result.converged);
  const auto labels = harden(result);
  std::size_t agree = 0;
  for (std::size_t n = 0; n < s.cols(); ++n) {
    std::size_t arg = 0;
    for (std::size_t m = 1; m < s.rows(); ++m)
      if (s(m, n) > s(arg, n)) arg = m;
    agree += labels[n] == static_cast<int>(arg);
  }
  // balancing can move borderline points, but most follow their best cluster
  CHECK(agree >= s.cols() / 2);
}

TEST_CASE("invalid transport inputs are rejected") {
  CHECK_THROWS_AS(sinkhorn_solve(make_problem(Matrix(), 25.0)),
                  std::invalid_argument);
  Matrix bad = Matrix::from_rows({{0.5, 1.0}, {0.5, 0.5}});  // 1.0 not allowed
  CHECK_THROWS_AS(sinkhorn_solve(make_problem(bad, 25.0)), std::invalid_argument);
  Matrix zero = Matrix::from_rows({{0.5, 0.0}, {0.5, 0.5}});
  CHECK_THROWS_AS(sinkhorn_solve(make_problem(zero, 25.0)), std::invalid_argument);
  Matrix ok = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  CHECK_THROWS_AS(sinkhorn_solve(make_problem(ok, -1.0)), std::invalid_argument);
  TransportProblem p = make_problem(ok, 25.0);
  p.max_iters = 0;
  CHECK_THROWS_AS(sinkhorn_solve(p), std::invalid_argument);
}

TEST_CASE("degenerate kernels raise a solver error naming the location") {
  // second row underflows: 1e-30^25 = 1e-750 -> 0
  Matrix s = Matrix::from_rows({{0.6, 0.6}, {1e-30, 1e-30}});
  try {
    sinkhorn_solve(make_problem(s, 25.0));
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }

  Matrix s2 = Matrix::from_rows({{0.6, 1e-30}, {0.6, 1e-30}});
  try {
    sinkhorn_solve(make_problem(s2, 25.0));
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("column 1") != std::string::npos);
  }
}

TEST_CASE("non-converged runs report iters_used and converged=false") {
  Rng rng(41);
  const Matrix s = oracles::random_similarity(6, 40, rng, 4.0);
  TransportProblem p = make_problem(s, 25.0);
  p.max_iters = 2;
  p.tolerance = 1e-15;
  const auto result = sinkhorn_solve(p);
  CHECK_FALSE(result.converged);
  CHECK(result.iters_used == 2);
  CHECK(result.plan.all_finite());
}
