#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otseg/matrix.hpp"

namespace otseg {

// One point cloud: xyz plus auxiliary channels per point, a class label per
// point, and (for synthetic data) the planted subclass each point was drawn
// from.
struct Scene {
  std::uint32_t id = 0;
  std::size_t class_count = 0;
  Matrix points;                       // N x (3 + aux)
  std::vector<int> labels;             // length N, in [0, class_count)
  std::vector<int> planted_subclass;   // length N or empty

  std::size_t point_count() const { return points.rows(); }
  std::size_t aux_count() const { return points.cols() - 3; }
  bool has_planted() const { return !planted_subclass.empty(); }
};

// Text format, gzip-compressed when the filename ends in .gz:
//   SCENE v1 id=<u32> n=<u32> aux=<u32> classes=<u32>
//   x y z a1..a_aux label [planted]     (n rows)
// Floats are written with 17 significant digits so a write/read round trip
// reproduces every bit.
Scene read_scene(const std::string& path);
void write_scene(const Scene& scene, const std::string& path);

// Every *.txt / *.gz under dir (non-recursive), sorted by filename. A path to
// a single scene file is also accepted.
std::vector<Scene> load_scene_dir(const std::string& dir);

}  // namespace otseg
