#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>
#include "otseg/errors.hpp"
#include "otseg/matrix.hpp"
#include "otseg/memory_bank.hpp"
#include "otseg/rng.hpp"
#include "support/oracles.hpp"

using otseg::Matrix;
using otseg::MemoryBank;

namespace {

Matrix tagged_rows(std::size_t n, std::size_t dim, double tag) {
  Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      m(i, j) = tag + static_cast<double>(i) + 0.001 * static_cast<double>(j);
  return m;
}

}  // namespace

TEST_CASE("gather concatenates slots in ascending scene order") {
  MemoryBank bank(4, 3, 8, 0);
  bank.push(7, 2, tagged_rows(2, 3, 700.0));
  bank.push(3, 2, tagged_rows(1, 3, 300.0));
  bank.push(5, 2, tagged_rows(2, 3, 500.0));

  const Matrix got = bank.gather(2);
  REQUIRE(got.rows() == 5);
  CHECK(got(0, 0) == 300.0);
  CHECK(got(1, 0) == 500.0);
  CHECK(got(2, 0) == 501.0);
  CHECK(got(3, 0) == 700.0);
  CHECK(got(4, 0) == 701.0);

  CHECK(bank.slot_count() == 3);
  CHECK(bank.row_count() == 5);
}

TEST_CASE("gather of an untouched subclass is an empty matrix of bank dim") {
  MemoryBank bank(4, 6, 8, 0);
  const Matrix got = bank.gather(1);
  CHECK(got.rows() == 0);
  CHECK(got.cols() == 6);
}

TEST_CASE("oversized pushes keep a per-scene-cap subsample of original rows") {
  const std::size_t cap = 5;
  MemoryBank bank(2, 4, cap, 42);
  const Matrix offered = tagged_rows(20, 4, 0.0);
  bank.push(0, 1, offered);

  const Matrix kept = bank.gather(1);
  REQUIRE(kept.rows() == cap);
  // every kept row is one of the offered rows, no duplicates
  std::set<double> seen;
  for (std::size_t i = 0; i < kept.rows(); ++i) {
    bool found = false;
    for (std::size_t s = 0; s < offered.rows(); ++s) {
      bool same = true;
      for (std::size_t j = 0; j < 4; ++j)
        if (kept(i, j) != offered(s, j)) same = false;
      if (same) found = true;
    }
    CHECK(found);
    CHECK(seen.insert(kept(i, 0)).second);
  }
}

TEST_CASE("same seed and push sequence reproduce the same subsamples") {
  MemoryBank a(3, 4, 3, 99);
  MemoryBank b(3, 4, 3, 99);
  for (std::uint32_t scene = 0; scene < 6; ++scene) {
    const Matrix rows = tagged_rows(11, 4, 10.0 * scene);
    a.push(scene, scene % 3, rows);
    b.push(scene, scene % 3, rows);
  }
  for (std::size_t g = 0; g < 3; ++g) CHECK(a.gather(g) == b.gather(g));

  MemoryBank c(3, 4, 3, 100);
  bool any_diff = false;
  for (std::uint32_t scene = 0; scene < 6; ++scene)
    c.push(scene, scene % 3, tagged_rows(11, 4, 10.0 * scene));
  for (std::size_t g = 0; g < 3; ++g)
    if (!(a.gather(g) == c.gather(g))) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("re-pushing a slot replaces its previous contents") {
  MemoryBank bank(2, 3, 8, 0);
  bank.push(4, 0, tagged_rows(3, 3, 1.0));
  CHECK(bank.row_count() == 3);
  bank.push(4, 0, tagged_rows(2, 3, 50.0));
  const Matrix got = bank.gather(0);
  REQUIRE(got.rows() == 2);
  CHECK(got(0, 0) == 50.0);
  CHECK(got(1, 0) == 51.0);
  CHECK(bank.slot_count() == 1);
}

TEST_CASE("cap zero stores nothing, empty push is a no-op") {
  MemoryBank off(2, 3, 0, 0);
  off.push(1, 0, tagged_rows(4, 3, 0.0));
  CHECK(off.row_count() == 0);
  CHECK(off.slot_count() == 0);

  MemoryBank on(2, 3, 4, 0);
  on.push(1, 0, Matrix(0, 3));
  CHECK(on.slot_count() == 0);
  // an empty push of wrong width is still a no-op, not an error trigger
  on.push(1, 0, Matrix());
  CHECK(on.row_count() == 0);
}

TEST_CASE("push and gather validate inputs") {
  MemoryBank bank(2, 3, 4, 0);
  CHECK_THROWS_AS(bank.push(0, 2, tagged_rows(1, 3, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(bank.push(0, 0, tagged_rows(1, 5, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(bank.gather(2), std::invalid_argument);
  CHECK_THROWS_AS(MemoryBank(0, 3, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(MemoryBank(2, 0, 4, 0), std::invalid_argument);
}

TEST_CASE("snapshot round trip preserves every slot bitwise") {
  otseg::Rng rng(7);
  MemoryBank bank(5, 6, 4, 7);
  bank.push(0, 0, oracles::random_matrix(3, 6, rng));
  bank.push(2, 0, oracles::random_matrix(9, 6, rng));  // subsampled
  bank.push(1, 3, oracles::random_matrix(4, 6, rng));
  bank.push(6, 4, oracles::random_matrix(1, 6, rng));

  const std::string path = "mbnk_roundtrip.bin";
  bank.save(path);
  const MemoryBank back = MemoryBank::load(path);

  CHECK(back.subclass_count() == bank.subclass_count());
  CHECK(back.dim() == bank.dim());
  CHECK(back.per_scene_cap() == bank.per_scene_cap());
  CHECK(back.slot_count() == bank.slot_count());
  CHECK(back.row_count() == bank.row_count());
  for (std::size_t g = 0; g < bank.subclass_count(); ++g)
    CHECK(back.gather(g) == bank.gather(g));
  std::remove(path.c_str());
}

TEST_CASE("loading a missing or mangled snapshot reports an io failure") {
  CHECK_THROWS_AS(MemoryBank::load("no_such_bank.bin"), otseg::IoError);

  const std::string path = "mbnk_badmagic.bin";
  {
    FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    std::fputs("XXXXgarbage", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(MemoryBank::load(path), otseg::IoError);
  std::remove(path.c_str());
}
