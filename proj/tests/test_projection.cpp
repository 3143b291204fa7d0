#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>
#include "otseg/matrix.hpp"
#include "otseg/projection.hpp"
#include "otseg/rng.hpp"
#include "support/oracles.hpp"

using otseg::Matrix;
using otseg::Projection2d;

namespace {

// covariance of the column-centered data, the same statistic the projector
// diagonalizes
Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
  for (auto& m : mean) m /= double(n);
  Matrix cov(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
  for (std::size_t i = 0; i < cov.size(); ++i)
    cov.data()[i] /= double(n - 1);
  return cov;
}

double column_variance(const Matrix& m, std::size_t col) {
  double mean = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, col);
  mean /= double(m.rows());
  double var = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double d = m(i, col) - mean;
    var += d * d;
  }
  return var / double(m.rows() - 1);
}

}  // namespace

TEST_CASE("identical input rows project to identical coordinates") {
  Matrix x(6, 4);
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = i < 3 ? 1.0 : -1.0;  // two distinct rows, three copies each
    x(i, 2) = i < 3 ? 0.5 : 2.5;
  }
  const Projection2d p = otseg::project_2d(x, 3);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(p.coords(i, 0) == p.coords(0, 0));
    CHECK(p.coords(i, 1) == p.coords(0, 1));
  }
  for (std::size_t i = 4; i < 6; ++i) {
    CHECK(p.coords(i, 0) == p.coords(3, 0));
    CHECK(p.coords(i, 1) == p.coords(3, 1));
  }
  // two distinct groups must not collapse onto one point
  CHECK(std::fabs(p.coords(0, 0) - p.coords(3, 0)) > 1e-9);
}

TEST_CASE("separated groups stay separated in the plane") {
  otseg::Rng rng(44);
  const std::size_t per = 20, d = 8;
  Matrix x(2 * per, d);
  for (std::size_t i = 0; i < 2 * per; ++i) {
    const double off = i < per ? 5.0 : -5.0;
    for (std::size_t j = 0; j < d; ++j)
      x(i, j) = (j == 2 ? off : 0.0) + 0.1 * rng.normal();
  }
  const Projection2d p = otseg::project_2d(x, 7);
  // the first component carries the group offset, so signs separate the groups
  double lo_a = 1e300, hi_a = -1e300, lo_b = 1e300, hi_b = -1e300;
  for (std::size_t i = 0; i < per; ++i) {
    lo_a = std::min(lo_a, p.coords(i, 0));
    hi_a = std::max(hi_a, p.coords(i, 0));
  }
  for (std::size_t i = per; i < 2 * per; ++i) {
    lo_b = std::min(lo_b, p.coords(i, 0));
    hi_b = std::max(hi_b, p.coords(i, 0));
  }
  CHECK((hi_a < lo_b || hi_b < lo_a));  // disjoint intervals
}

TEST_CASE("projection variances match the covariance spectrum") {
  otseg::Rng rng(45);
  // anisotropic cloud: strong direction, medium direction, small noise
  const std::size_t n = 300, d = 5;
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = 4.0 * rng.normal(), t = 1.5 * rng.normal();
    for (std::size_t j = 0; j < d; ++j) x(i, j) = 0.05 * rng.normal();
    x(i, 0) += s;
    x(i, 1) += 0.5 * s + t;
    x(i, 3) += t;
  }
  const Projection2d p = otseg::project_2d(x, 9);
  const auto eig = oracles::symmetric_eigenvalues(covariance(x));
  CHECK(p.eigenvalues[0] == doctest::Approx(eig[0]).epsilon(1e-8));
  CHECK(p.eigenvalues[1] == doctest::Approx(eig[1]).epsilon(1e-8));
  CHECK(p.eigenvalues[0] >= p.eigenvalues[1]);

  // coordinates along each component really spread by the eigenvalue
  CHECK(column_variance(p.coords, 0) == doctest::Approx(eig[0]).epsilon(1e-6));
  CHECK(column_variance(p.coords, 1) == doctest::Approx(eig[1]).epsilon(1e-6));

  // deterministic in the seed
  const Projection2d q = otseg::project_2d(x, 9);
  CHECK(q.coords == p.coords);
}

TEST_CASE("degenerate inputs are handled") {
  CHECK_THROWS_AS(otseg::project_2d(Matrix(1, 4), 0), std::invalid_argument);

  // constant data: no variance anywhere, both eigenvalues zero
  Matrix flat(5, 3, 2.0);
  const Projection2d p = otseg::project_2d(flat, 0);
  CHECK(p.eigenvalues[0] == 0.0);
  CHECK(p.eigenvalues[1] == 0.0);
  for (std::size_t i = 0; i < p.coords.size(); ++i)
    CHECK(p.coords.data()[i] == 0.0);

  // rank-1 data: second eigenvalue vanishes
  Matrix line(10, 3);
  for (std::size_t i = 0; i < 10; ++i) line(i, 1) = double(i);
  const Projection2d r = otseg::project_2d(line, 0);
  CHECK(r.eigenvalues[0] > 0.0);
  CHECK(std::fabs(r.eigenvalues[1]) < 1e-9);
}
