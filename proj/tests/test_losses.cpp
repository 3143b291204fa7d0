#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <doctest.h>
#include "otseg/cluster.hpp"
#include "otseg/losses.hpp"
#include "otseg/matrix.hpp"
#include "otseg/rng.hpp"
#include "support/oracles.hpp"

using otseg::CeResult;
using otseg::CenterBank;
using otseg::Matrix;
using otseg::PccResult;
using otseg::PpcMode;
using otseg::PpcResult;

namespace {

CenterBank make_bank(std::size_t classes, std::size_t m, std::size_t dim,
                     otseg::Rng& rng) {
  CenterBank bank;
  bank.class_count = classes;
  bank.clusters_per_class = m;
  bank.dim = dim;
  bank.centers = oracles::random_unit_rows(classes * m, dim, rng);
  return bank;
}

std::vector<int> random_labels(std::size_t n, int hi, otseg::Rng& rng) {
  std::vector<int> out(n);
  for (auto& v : out) v = static_cast<int>(rng.uniform_index(hi));
  return out;
}

}  // namespace

TEST_CASE("cross entropy on all-zero logits is log of the class count") {
  const std::size_t n = 5, c = 3;
  const Matrix logits(n, c);
  const std::vector<int> labels{0, 1, 2, 0, 1};
  const CeResult res = otseg::ce_loss(logits, labels);
  CHECK(res.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  // softmax is uniform, so each gradient entry is (1/c - onehot)/n
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double want =
          (1.0 / 3.0 - (static_cast<int>(j) == labels[i] ? 1.0 : 0.0)) / 5.0;
      CHECK(res.grad_logits(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy matches the double-loop reference on random batches") {
  otseg::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(16);
    const std::size_t c = 2 + rng.uniform_index(5);
    const Matrix logits = oracles::random_matrix(n, c, rng, 3.0);
    const auto labels = random_labels(n, static_cast<int>(c), rng);
    const CeResult res = otseg::ce_loss(logits, labels);
    CHECK(std::fabs(res.value - double(oracles::ce_naive(logits, labels))) < 1e-10);
  }
}

TEST_CASE("cross entropy gradient agrees with central differences") {
  otseg::Rng rng(12);
  Matrix logits = oracles::random_matrix(6, 4, rng, 2.0);
  const std::vector<int> labels{0, 3, 1, 1, 2, 0};
  const CeResult res = otseg::ce_loss(logits, labels);
  auto f = [&] { return otseg::ce_loss(logits, labels).value; };
  for (std::size_t i = 0; i < logits.rows(); ++i)
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double num = oracles::central_diff(logits(i, j), f);
      CHECK(oracles::grad_close(res.grad_logits(i, j), num));
    }
}

TEST_CASE("cross entropy rejects bad labels") {
  const Matrix logits(2, 3);
  CHECK_THROWS_AS(otseg::ce_loss(logits, {0}), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ce_loss(logits, {0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ce_loss(logits, {0, -1}), std::invalid_argument);
}

TEST_CASE("point contrast with one equidistant positive and negative is log 2") {
  // anchor orthogonal to both pool rows: every similarity is 0
  Matrix anchors(1, 3);
  anchors(0, 0) = 1.0;
  Matrix pool(2, 3);
  pool(0, 1) = 1.0;
  pool(1, 2) = 1.0;
  const std::vector<int> asub{7}, psub{7, 9};
  const double tau = 0.1;
  const PpcResult res = otseg::ppc_loss(anchors, asub, pool, psub, tau);
  CHECK(res.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(res.skipped_anchors == 0);
  // closed form: grad = (0.5/tau) * (negative_row - positive_row)
  CHECK(res.grad_anchors(0, 0) == doctest::Approx(0.0));
  CHECK(res.grad_anchors(0, 1) == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK(res.grad_anchors(0, 2) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("anchors without a positive contribute zero and are counted") {
  otseg::Rng rng(21);
  const Matrix anchors = oracles::random_unit_rows(3, 4, rng);
  const Matrix pool = oracles::random_unit_rows(5, 4, rng);
  const std::vector<int> asub{0, 1, 0};
  const std::vector<int> psub{2, 2, 2, 2, 2};  // nothing matches any anchor
  const PpcResult res = otseg::ppc_loss(anchors, asub, pool, psub, 0.1);
  CHECK(res.value == 0.0);
  CHECK(res.skipped_anchors == 3);
  for (std::size_t i = 0; i < res.grad_anchors.size(); ++i)
    CHECK(res.grad_anchors.data()[i] == 0.0);

  const PpcResult empty = otseg::ppc_loss(anchors, asub, Matrix(0, 4), {}, 0.1);
  CHECK(empty.value == 0.0);
  CHECK(empty.skipped_anchors == 3);
}

TEST_CASE("point contrast matches the double-loop reference in both modes") {
  otseg::Rng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(6);
    const std::size_t n_a = 1 + rng.uniform_index(10);
    const std::size_t n_p = 1 + rng.uniform_index(18);
    const Matrix anchors = oracles::random_unit_rows(n_a, d, rng);
    const Matrix pool = oracles::random_unit_rows(n_p, d, rng);
    const auto asub = random_labels(n_a, 4, rng);
    const auto psub = random_labels(n_p, 4, rng);
    const double tau = trial % 2 ? 0.1 : 0.47;

    std::vector<int> self;
    if (trial % 3 == 0) {
      self.assign(n_a, -1);
      for (std::size_t i = 0; i < std::min(n_a, n_p); ++i)
        self[i] = static_cast<int>(i);
    }

    for (const bool exclusive : {true, false}) {
      const auto mode = exclusive ? PpcMode::kExclusive : PpcMode::kMaskedMean;
      const PpcResult got = otseg::ppc_loss(anchors, asub, pool, psub, tau, self, mode);
      const auto want = oracles::ppc_naive(anchors, asub, pool, psub, tau, self, exclusive);
      CHECK(std::fabs(got.value - double(want.value)) < 1e-10);
      CHECK(got.skipped_anchors == want.skipped);
    }
  }
}

TEST_CASE("denominator modes agree with a single positive and diverge with more") {
  otseg::Rng rng(23);
  const Matrix anchors = oracles::random_unit_rows(4, 5, rng);

  // one positive each
  const Matrix pool1 = oracles::random_unit_rows(6, 5, rng);
  const std::vector<int> asub{0, 1, 2, 3};
  const std::vector<int> psub1{0, 1, 2, 3, 4, 4};
  const PpcResult a1 = otseg::ppc_loss(anchors, asub, pool1, psub1, 0.1, {},
                                       PpcMode::kExclusive);
  const PpcResult b1 = otseg::ppc_loss(anchors, asub, pool1, psub1, 0.1, {},
                                       PpcMode::kMaskedMean);
  CHECK(a1.value == doctest::Approx(b1.value).epsilon(1e-12));

  // several positives: the wider denominator can only raise the loss
  const std::vector<int> psub2{0, 0, 1, 1, 2, 3};
  const PpcResult a2 = otseg::ppc_loss(anchors, asub, pool1, psub2, 0.1, {},
                                       PpcMode::kExclusive);
  const PpcResult b2 = otseg::ppc_loss(anchors, asub, pool1, psub2, 0.1, {},
                                       PpcMode::kMaskedMean);
  CHECK(b2.value > a2.value);
}

TEST_CASE("point contrast only cares about label partitions, not label values") {
  otseg::Rng rng(24);
  const Matrix anchors = oracles::random_unit_rows(6, 4, rng);
  const Matrix pool = oracles::random_unit_rows(9, 4, rng);
  const std::vector<int> asub{0, 1, 2, 0, 1, 2};
  const std::vector<int> psub{0, 0, 1, 1, 2, 2, 0, 1, 2};
  // same partition under the relabeling 0->5, 1->3, 2->8
  auto remap = [](std::vector<int> v) {
    for (auto& x : v) x = x == 0 ? 5 : (x == 1 ? 3 : 8);
    return v;
  };
  const PpcResult plain = otseg::ppc_loss(anchors, asub, pool, psub, 0.1);
  const PpcResult mapped =
      otseg::ppc_loss(anchors, remap(asub), pool, remap(psub), 0.1);
  CHECK(plain.value == mapped.value);
  CHECK(plain.grad_anchors == mapped.grad_anchors);
}

TEST_CASE("marking an anchor's own pool row matches deleting that row") {
  otseg::Rng rng(25);
  const std::size_t d = 5;
  const Matrix anchors = oracles::random_unit_rows(3, d, rng);
  const Matrix rest = oracles::random_unit_rows(6, d, rng);
  const std::vector<int> asub{0, 1, 0};
  const std::vector<int> rest_sub{0, 0, 1, 1, 2, 0};

  // pool = anchors stacked on top of the rest
  Matrix pool(9, d);
  std::vector<int> psub(9);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < d; ++k) pool(i, k) = anchors(i, k);
    psub[i] = asub[i];
  }
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t k = 0; k < d; ++k) pool(3 + i, k) = rest(i, k);
    psub[3 + i] = rest_sub[i];
  }
  const std::vector<int> self{0, 1, 2};
  const PpcResult with_self = otseg::ppc_loss(anchors, asub, pool, psub, 0.1, self);

  // reference: each anchor scored against a pool that physically lacks its row
  double want = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    Matrix cut(8, d);
    std::vector<int> cut_sub;
    std::size_t at = 0;
    for (std::size_t j = 0; j < 9; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < d; ++k) cut(at, k) = pool(j, k);
      cut_sub.push_back(psub[j]);
      ++at;
    }
    Matrix one(1, d);
    for (std::size_t k = 0; k < d; ++k) one(0, k) = anchors(i, k);
    want += otseg::ppc_loss(one, {asub[i]}, cut, cut_sub, 0.1).value;
  }
  CHECK(with_self.value == doctest::Approx(want / 3.0).epsilon(1e-12));
}

TEST_CASE("point contrast gradients agree with central differences") {
  otseg::Rng rng(26);
  for (const auto mode : {PpcMode::kExclusive, PpcMode::kMaskedMean}) {
    Matrix anchors = oracles::random_unit_rows(4, 3, rng);
    const Matrix pool = oracles::random_unit_rows(7, 3, rng);
    const std::vector<int> asub{0, 1, 0, 2};
    const std::vector<int> psub{0, 0, 1, 1, 2, 0, 3};
    const double tau = 0.2;
    const PpcResult res = otseg::ppc_loss(anchors, asub, pool, psub, tau, {}, mode);
    auto f = [&] {
      return otseg::ppc_loss(anchors, asub, pool, psub, tau, {}, mode).value;
    };
    for (std::size_t i = 0; i < anchors.rows(); ++i)
      for (std::size_t k = 0; k < anchors.cols(); ++k) {
        const double num = oracles::central_diff(anchors(i, k), f);
        CHECK(oracles::grad_close(res.grad_anchors(i, k), num));
      }
  }
}

TEST_CASE("point contrast validates its inputs") {
  const Matrix a(2, 3), p(2, 3);
  const std::vector<int> two{0, 1};
  CHECK_THROWS_AS(otseg::ppc_loss(a, two, p, two, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ppc_loss(a, two, p, two, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ppc_loss(a, {0}, p, two, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ppc_loss(a, two, p, {0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(otseg::ppc_loss(a, two, Matrix(2, 4), two, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(otseg::ppc_loss(a, two, p, two, 0.1, {0}), std::invalid_argument);
}

TEST_CASE("center contrast on centers orthogonal to every point is uniform") {
  // embeddings live in the first coordinate, centers in the remaining three
  Matrix emb(2, 4);
  emb(0, 0) = 1.0;
  emb(1, 0) = -1.0;
  CenterBank bank;
  bank.class_count = 1;
  bank.clusters_per_class = 3;
  bank.dim = 4;
  bank.centers = Matrix(3, 4);
  bank.centers(0, 1) = 1.0;
  bank.centers(1, 2) = 1.0;
  bank.centers(2, 3) = 1.0;
  const PccResult res = otseg::pcc_loss(emb, {0, 2}, bank, 0.1);
  CHECK(res.value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("center contrast matches the double-loop reference") {
  otseg::Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(6);
    const std::size_t n = 1 + rng.uniform_index(12);
    const std::size_t classes = 1 + rng.uniform_index(3);
    const std::size_t m = 1 + rng.uniform_index(4);
    const CenterBank bank = make_bank(classes, m, d, rng);
    const Matrix emb = oracles::random_unit_rows(n, d, rng);
    const auto sub = random_labels(n, static_cast<int>(classes * m), rng);
    const double tau = trial % 2 ? 0.1 : 0.33;
    const PccResult got = otseg::pcc_loss(emb, sub, bank, tau);
    const double want = double(oracles::pcc_naive(emb, sub, bank.centers, tau));
    CHECK(std::fabs(got.value - want) < 1e-10);
  }
}

TEST_CASE("center contrast gradients agree with central differences") {
  otseg::Rng rng(32);
  const CenterBank bank = make_bank(2, 2, 4, rng);
  Matrix emb = oracles::random_unit_rows(5, 4, rng);
  const std::vector<int> sub{0, 3, 1, 2, 0};
  const double tau = 0.15;
  const PccResult res = otseg::pcc_loss(emb, sub, bank, tau);
  auto f = [&] { return otseg::pcc_loss(emb, sub, bank, tau).value; };
  for (std::size_t i = 0; i < emb.rows(); ++i)
    for (std::size_t k = 0; k < emb.cols(); ++k) {
      const double num = oracles::central_diff(emb(i, k), f);
      CHECK(oracles::grad_close(res.grad_embeddings(i, k), num));
    }
}

TEST_CASE("center contrast validates its inputs") {
  otseg::Rng rng(33);
  const CenterBank bank = make_bank(2, 2, 4, rng);
  const Matrix emb = oracles::random_unit_rows(2, 4, rng);
  CHECK_THROWS_AS(otseg::pcc_loss(emb, {0, 1}, bank, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(otseg::pcc_loss(emb, {0}, bank, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(otseg::pcc_loss(emb, {0, 4}, bank, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(otseg::pcc_loss(Matrix(2, 3), {0, 1}, bank, 0.1),
                  std::invalid_argument);
}

TEST_CASE("combined objective weights the contrastive pair by alpha") {
  otseg::Rng rng(41);
  const std::size_t n = 4, d = 3;
  CeResult ce;
  ce.value = 1.5;
  ce.grad_logits = oracles::random_matrix(n, 2, rng);
  PpcResult ppc;
  ppc.value = 0.25;
  ppc.grad_anchors = oracles::random_matrix(n, d, rng);
  ppc.skipped_anchors = 2;
  PccResult pcc;
  pcc.value = 0.5;
  pcc.grad_embeddings = oracles::random_matrix(n, d, rng);

  const auto rep = otseg::total_loss(ce, ppc, pcc, 0.7, 0.1);
  CHECK(rep.total == doctest::Approx(1.5 + 0.7 * 0.75).epsilon(1e-15));
  CHECK(rep.ce == 1.5);
  CHECK(rep.ppc == 0.25);
  CHECK(rep.pcc == 0.5);
  CHECK(rep.alpha == 0.7);
  CHECK(rep.tau == 0.1);
  CHECK(rep.skipped_anchors == 2);
  CHECK(rep.grad_logits == ce.grad_logits);
  for (std::size_t i = 0; i < rep.grad_embeddings.size(); ++i)
    CHECK(rep.grad_embeddings.data()[i] ==
          doctest::Approx(0.7 * (ppc.grad_anchors.data()[i] +
                                 pcc.grad_embeddings.data()[i]))
              .epsilon(1e-15));

  // alpha 0 keeps the bookkeeping but zeroes the embedding pull
  const auto plain = otseg::total_loss(ce, ppc, pcc, 0.0, 0.1);
  CHECK(plain.total == 1.5);
  for (std::size_t i = 0; i < plain.grad_embeddings.size(); ++i)
    CHECK(plain.grad_embeddings.data()[i] == 0.0);

  // missing contrastive gradients leave the embedding gradient empty
  const auto bare = otseg::total_loss(ce, PpcResult{}, PccResult{}, 1.0, 0.1);
  CHECK(bare.grad_embeddings.empty());

  CHECK_THROWS_AS(otseg::total_loss(ce, ppc, pcc, -0.1, 0.1), std::invalid_argument);
}
