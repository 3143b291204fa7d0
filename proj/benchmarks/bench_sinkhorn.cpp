#include <benchmark/benchmark.h>

#include "otseg/cluster.hpp"
#include "otseg/matrix.hpp"
#include "otseg/rng.hpp"
#include "otseg/sinkhorn.hpp"

namespace {

using namespace otseg;

Matrix random_similarity(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t n = 0; n < cols; ++n) {
    double denom = 0.0;
    std::vector<double> e(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      e[r] = std::exp(2.0 * rng.normal());
      denom += e[r];
    }
    for (std::size_t r = 0; r < rows; ++r) m(r, n) = e[r] / denom;
  }
  return m;
}

Matrix random_unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (auto& x : m.row(r)) {
      x = rng.normal();
      sq += x * x;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : m.row(r)) x *= inv;
  }
  return m;
}

void BM_SinkhornSolve(benchmark::State& state) {
  const auto clusters = static_cast<std::size_t>(state.range(0));
  const auto points = static_cast<std::size_t>(state.range(1));
  Rng rng(99);
  TransportProblem problem;
  problem.similarity = random_similarity(clusters, points, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sinkhorn_solve(problem));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points));
}
BENCHMARK(BM_SinkhornSolve)
    ->Args({8, 64})
    ->Args({40, 1000})
    ->Args({40, 10000})
    ->Unit(benchmark::kMillisecond);

// end-to-end batch assignment: similarity build, transport, harden, means
void BM_AssignSubclassLabels(benchmark::State& state) {
  const auto points = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  const Matrix embeddings = random_unit_rows(points, 64, rng);
  const CenterBank centers = init_centers(1, 40, 64, 3);
  const std::vector<int> labels(points, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        assign_subclass_labels(embeddings, labels, centers, AssignSettings{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points));
}
BENCHMARK(BM_AssignSubclassLabels)
    ->Arg(5000)
    ->Arg(50000)
    ->Unit(benchmark::kMillisecond);

}  // namespace
