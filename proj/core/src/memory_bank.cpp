#include "otseg/memory_bank.hpp"

#include <algorithm>
#include <stdexcept>

#include "otseg/binio.hpp"
#include "otseg/errors.hpp"

namespace otseg {

namespace {
constexpr char kMagic[5] = "MBNK";
constexpr std::uint32_t kVersion = 1;
}  // namespace

MemoryBank::MemoryBank(std::size_t subclass_count, std::size_t dim,
                       std::size_t per_scene_cap, std::uint64_t seed)
    : dim_(dim), per_scene_cap_(per_scene_cap), slots_(subclass_count), rng_(seed) {
  if (subclass_count == 0 || dim == 0)
    throw std::invalid_argument("MemoryBank: subclass count and dim must be positive");
}

void MemoryBank::push(std::uint32_t scene_id, std::size_t subclass,
                      const Matrix& rows) {
  if (subclass >= slots_.size())
    throw std::invalid_argument("MemoryBank::push: subclass " +
                                std::to_string(subclass) + " out of range");
  if (rows.rows() == 0) return;
  if (rows.cols() != dim_)
    throw std::invalid_argument("MemoryBank::push: row dim " +
                                std::to_string(rows.cols()) + " != bank dim " +
                                std::to_string(dim_));
  if (per_scene_cap_ == 0) return;

  Matrix kept;
  if (rows.rows() <= per_scene_cap_) {
    kept = rows;
  } else {
    const auto pick = sample_without_replacement(rows.rows(), per_scene_cap_, rng_);
    kept = Matrix(pick.size(), dim_);
    for (std::size_t k = 0; k < pick.size(); ++k) {
      const auto src = rows.row(pick[k]);
      std::copy(src.begin(), src.end(), kept.row(k).begin());
    }
  }
  slots_[subclass][scene_id] = std::move(kept);
}

Matrix MemoryBank::gather(std::size_t subclass) const {
  if (subclass >= slots_.size())
    throw std::invalid_argument("MemoryBank::gather: subclass " +
                                std::to_string(subclass) + " out of range");
  std::size_t total = 0;
  for (const auto& [scene, rows] : slots_[subclass]) total += rows.rows();
  Matrix out(total, dim_);
  std::size_t at = 0;
  for (const auto& [scene, rows] : slots_[subclass]) {
    std::copy(rows.data(), rows.data() + rows.size(), out.data() + at * dim_);
    at += rows.rows();
  }
  return out;
}

std::size_t MemoryBank::slot_count() const {
  std::size_t n = 0;
  for (const auto& by_scene : slots_) n += by_scene.size();
  return n;
}

std::size_t MemoryBank::row_count() const {
  std::size_t n = 0;
  for (const auto& by_scene : slots_)
    for (const auto& [scene, rows] : by_scene) n += rows.rows();
  return n;
}

void MemoryBank::save(const std::string& path) const {
  auto os = binio::open_out(path);
  binio::put_magic(os, kMagic);
  binio::put_u32(os, kVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(slots_.size()));
  binio::put_u32(os, static_cast<std::uint32_t>(dim_));
  binio::put_u32(os, static_cast<std::uint32_t>(per_scene_cap_));
  binio::put_u32(os, static_cast<std::uint32_t>(slot_count()));
  for (std::size_t g = 0; g < slots_.size(); ++g) {
    for (const auto& [scene, rows] : slots_[g]) {
      binio::put_u32(os, static_cast<std::uint32_t>(g));
      binio::put_u32(os, scene);
      binio::put_u32(os, static_cast<std::uint32_t>(rows.rows()));
    }
  }
  for (const auto& by_scene : slots_)
    for (const auto& [scene, rows] : by_scene)
      for (std::size_t i = 0; i < rows.size(); ++i)
        binio::put_f64(os, rows.data()[i]);
  if (!os) throw IoError("failed writing " + path);
}

MemoryBank MemoryBank::load(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kMagic, path);
  const auto version = binio::get_u32(is, "version");
  if (version != kVersion)
    throw IoError(path + ": unsupported memory bank version " +
                  std::to_string(version));
  const std::size_t subclasses = binio::get_u32(is, "subclass count");
  const std::size_t dim = binio::get_u32(is, "dim");
  const std::size_t cap = binio::get_u32(is, "per-scene cap");
  const std::size_t slots = binio::get_u32(is, "slot count");
  if (subclasses == 0 || dim == 0) throw IoError(path + ": zero dimension in header");

  MemoryBank bank(subclasses, dim, cap, 0);
  struct Entry {
    std::uint32_t subclass, scene, count;
  };
  std::vector<Entry> index(slots);
  for (auto& e : index) {
    e.subclass = binio::get_u32(is, "slot subclass");
    e.scene = binio::get_u32(is, "slot scene");
    e.count = binio::get_u32(is, "slot count");
    if (e.subclass >= subclasses)
      throw IoError(path + ": slot subclass " + std::to_string(e.subclass) +
                    " out of range");
  }
  for (const auto& e : index) {
    Matrix rows(e.count, dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
      rows.data()[i] = binio::get_f64(is, "bank payload");
    bank.slots_[e.subclass][e.scene] = std::move(rows);
  }
  return bank;
}

}  // namespace otseg
