#include "otseg/projection.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "otseg/rng.hpp"

namespace otseg {

namespace {

// Largest eigenpair of the symmetric matrix c, or eigenvalue 0 with a zero
// vector when c has no mass left (fully deflated).
std::pair<double, std::vector<double>> power_iterate(const Matrix& c, Rng& rng) {
  const std::size_t d = c.rows();
  std::vector<double> v(d), next(d);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    sq += x * x;
  }
  const double inv0 = 1.0 / std::sqrt(sq);
  for (auto& x : v) x *= inv0;

  double eigen = 0.0;
  for (int iter = 0; iter < 1000; ++iter) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      const double* row = c.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * v[j];
      next[i] = acc;
    }
    double norm_sq = 0.0;
    for (double x : next) norm_sq += x * x;
    const double norm = std::sqrt(norm_sq);
    if (norm < 1e-300) return {0.0, std::vector<double>(d, 0.0)};
    double delta = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      next[i] /= norm;
      delta = std::max(delta, std::abs(next[i] - v[i]));
    }
    v = next;
    eigen = norm;
    if (delta < 1e-13 && iter > 2) break;
  }
  // sign convention: largest-magnitude entry positive
  std::size_t arg = 0;
  for (std::size_t i = 1; i < d; ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (auto& x : v) x = -x;
  return {eigen, v};
}

}  // namespace

Projection2d project_2d(const Matrix& embeddings, std::uint64_t seed) {
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  if (n < 2)
    throw std::invalid_argument("project_2d: need at least 2 points, got " +
                                std::to_string(n));
  if (d == 0) throw std::invalid_argument("project_2d: zero-dimensional input");

  Matrix centered = embeddings;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = embeddings.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = centered.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] -= mean[j];
  }

  Matrix cov = matmul_tn(centered, centered);
  const double inv = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < cov.size(); ++i) cov.data()[i] *= inv;

  Rng rng(Rng::derive(seed, 0x70636132ULL));
  Projection2d out;
  out.coords = Matrix(n, 2);
  std::vector<std::vector<double>> axes;
  for (int comp = 0; comp < 2; ++comp) {
    auto [eigen, v] = power_iterate(cov, rng);
    out.eigenvalues[comp] = eigen;
    axes.push_back(v);
    // deflate: cov -= eigen * v v^T
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov(i, j) -= eigen * v[i] * v[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = centered.row(i);
    for (int comp = 0; comp < 2; ++comp) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += row[j] * axes[comp][j];
      out.coords(i, comp) = acc;
    }
  }
  return out;
}

}  // namespace otseg
