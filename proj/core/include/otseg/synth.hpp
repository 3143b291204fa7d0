#pragma once

#include <cstdint>
#include <vector>

#include "otseg/scene.hpp"

namespace otseg {

// Recipe for synthetic scenes: each class is a mixture of Gaussian blobs
// ("modes") in coordinate+auxiliary space, and every point remembers which
// mode produced it. Mode centroids are shared across scenes so the latent
// structure is stable; each scene redraws the noise.
struct SynthSpec {
  std::size_t class_count = 3;
  std::size_t modes_per_class = 2;
  std::size_t points_per_mode = 50;
  double mode_separation = 6.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  std::size_t scene_count = 1;
  std::size_t aux_count = 1;
};

void validate(const SynthSpec& spec);

std::vector<Scene> generate(const SynthSpec& spec);

}  // namespace otseg
