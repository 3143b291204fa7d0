#include "otseg/synth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "otseg/rng.hpp"

namespace otseg {

void validate(const SynthSpec& spec) {
  if (spec.class_count == 0 || spec.modes_per_class == 0 ||
      spec.points_per_mode == 0 || spec.scene_count == 0)
    throw std::invalid_argument("synth spec: all counts must be at least 1");
  if (!(spec.mode_separation > 0.0))
    throw std::invalid_argument("synth spec: mode_separation must be positive");
  if (spec.noise_sigma < 0.0)
    throw std::invalid_argument("synth spec: noise_sigma must be nonnegative");
}

namespace {

// Mode centroids sampled in a box, rejecting draws closer than the required
// separation to any accepted centroid. The box grows if a configuration is
// too crowded to place.
Matrix place_centroids(const SynthSpec& spec, std::size_t dim) {
  const std::size_t total = spec.class_count * spec.modes_per_class;
  Rng rng(Rng::derive(spec.seed, 0x63656e74726f69ULL));
  double side = spec.mode_separation *
                (std::ceil(std::pow(static_cast<double>(total),
                                    1.0 / static_cast<double>(dim))) + 1.0);
  for (;;) {
    Matrix centroids(total, dim);
    std::size_t placed = 0;
    for (; placed < total; ++placed) {
      bool ok = false;
      for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
        auto row = centroids.row(placed);
        for (auto& x : row) x = rng.uniform() * side;
        ok = true;
        for (std::size_t j = 0; j < placed && ok; ++j) {
          double sq = 0.0;
          const auto other = centroids.row(j);
          for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - other[d];
            sq += diff * diff;
          }
          ok = sq >= spec.mode_separation * spec.mode_separation;
        }
      }
      if (!ok) break;
    }
    if (placed == total) return centroids;
    side *= 1.5;
  }
}

}  // namespace

std::vector<Scene> generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t dim = 3 + spec.aux_count;
  const Matrix centroids = place_centroids(spec, dim);
  const std::size_t scene_points =
      spec.class_count * spec.modes_per_class * spec.points_per_mode;

  std::vector<Scene> scenes;
  scenes.reserve(spec.scene_count);
  for (std::size_t k = 0; k < spec.scene_count; ++k) {
    Scene scene;
    scene.id = static_cast<std::uint32_t>(k);
    scene.class_count = spec.class_count;
    scene.points = Matrix(scene_points, dim);
    scene.labels.resize(scene_points);
    scene.planted_subclass.resize(scene_points);
    Rng rng(Rng::derive(spec.seed, 0x7363656e65ULL + k));
    std::size_t at = 0;
    for (std::size_t c = 0; c < spec.class_count; ++c) {
      for (std::size_t m = 0; m < spec.modes_per_class; ++m) {
        const auto centroid = centroids.row(c * spec.modes_per_class + m);
        for (std::size_t i = 0; i < spec.points_per_mode; ++i, ++at) {
          auto row = scene.points.row(at);
          for (std::size_t d = 0; d < dim; ++d)
            row[d] = centroid[d] + spec.noise_sigma * rng.normal();
          scene.labels[at] = static_cast<int>(c);
          scene.planted_subclass[at] = static_cast<int>(m);
        }
      }
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace otseg
