#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otseg/matrix.hpp"
#include "otseg/rng.hpp"

namespace otseg {

// Feature store for contrastive negatives/positives: at most `per_scene_cap`
// embedding rows per (subclass, scene) slot. Pushing the same slot again
// replaces its contents, so a slot always reflects the most recent visit to
// that scene. Single-threaded by design; the trainer gathers before it pushes,
// so within a step reads see the bank as of the end of the previous step.
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(std::size_t subclass_count, std::size_t dim,
             std::size_t per_scene_cap, std::uint64_t seed);

  // Stores rows for one slot. When more than per_scene_cap rows are offered, a
  // uniform sample of per_scene_cap survives (seeded, so runs reproduce).
  // An empty matrix is a no-op.
  void push(std::uint32_t scene_id, std::size_t subclass, const Matrix& rows);

  // All rows stored for a subclass, scenes in ascending id order. 0 x dim when
  // the subclass has no entries.
  Matrix gather(std::size_t subclass) const;

  std::size_t subclass_count() const { return slots_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t per_scene_cap() const { return per_scene_cap_; }
  std::size_t slot_count() const;
  std::size_t row_count() const;

  void save(const std::string& path) const;
  static MemoryBank load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::size_t per_scene_cap_ = 0;
  std::vector<std::map<std::uint32_t, Matrix>> slots_;
  Rng rng_{0};
};

}  // namespace otseg
