#include <benchmark/benchmark.h>

#include "otseg/cluster.hpp"
#include "otseg/losses.hpp"
#include "otseg/matrix.hpp"
#include "otseg/model.hpp"
#include "otseg/rng.hpp"

namespace {

using namespace otseg;

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

std::vector<int> random_ints(std::size_t n, std::size_t limit, Rng& rng) {
  std::vector<int> out(n);
  for (auto& x : out) x = static_cast<int>(rng.uniform_index(limit));
  return out;
}

void BM_PpcLoss(benchmark::State& state) {
  const auto pool_rows = static_cast<std::size_t>(state.range(0));
  Rng rng(17);
  const Matrix anchors = random_unit_rows(512, 16, rng);
  const Matrix pool = random_unit_rows(pool_rows, 16, rng);
  const auto anchor_sub = random_ints(512, 120, rng);
  const auto pool_sub = random_ints(pool_rows, 120, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ppc_loss(anchors, anchor_sub, pool, pool_sub, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_PpcLoss)->Arg(512)->Arg(2048)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_PccLoss(benchmark::State& state) {
  Rng rng(23);
  const Matrix embeddings = random_unit_rows(512, 16, rng);
  const CenterBank bank = init_centers(3, 40, 16, 5);
  const auto sub = random_ints(512, bank.subclass_count(), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pcc_loss(embeddings, sub, bank, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_PccLoss)->Unit(benchmark::kMillisecond);

void BM_CeLoss(benchmark::State& state) {
  Rng rng(29);
  Matrix logits(2048, 13);
  for (std::size_t i = 0; i < logits.size(); ++i)
    logits.data()[i] = 3.0 * rng.normal();
  const auto labels = random_ints(2048, 13, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ce_loss(logits, labels));
  }
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_CeLoss)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(31);
  const Model model = init_model(4, {64, 64}, 16, 0, 13, 1);
  Matrix points(batch, 4);
  for (std::size_t i = 0; i < points.size(); ++i)
    points.data()[i] = rng.normal();
  const auto labels = random_ints(batch, 13, rng);
  for (auto _ : state) {
    const ForwardResult fwd = forward(model, points);
    const CeResult ce = ce_loss(fwd.logits, labels);
    benchmark::DoNotOptimize(
        backward(model, fwd.cache, Matrix(), ce.grad_logits));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ForwardBackward)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

}  // namespace
