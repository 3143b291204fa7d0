#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otseg/matrix.hpp"
#include "otseg/sinkhorn.hpp"

namespace otseg {

// Per-class sets of cluster centers on the unit sphere. Row c*M + m holds
// center m of class c, so a row index doubles as a global subclass id.
struct CenterBank {
  std::size_t class_count = 0;
  std::size_t clusters_per_class = 0;  // M
  std::size_t dim = 0;
  Matrix centers;  // (class_count * M) x dim, unit rows

  std::size_t subclass_count() const { return class_count * clusters_per_class; }
  std::span<const double> center(std::size_t global_id) const {
    return centers.row(global_id);
  }
};

// Unit-norm random initialization, deterministic in the seed.
CenterBank init_centers(std::size_t class_count, std::size_t clusters_per_class,
                        std::size_t dim, std::uint64_t seed);

struct ClusterOutcome {
  std::vector<int> subclass_labels;  // global ids, length = point count
  Matrix batch_means;                // subclass_count x dim, zero where empty
  std::vector<bool> occupied;        // subclass received at least one point
};

struct AssignSettings {
  double lambda = 25.0;
  std::size_t max_iters = 100;
  double tolerance = 1e-8;
};

// Balanced assignment of embeddings to their own class's centers. Each class
// present in the batch gets an independent transport solve; points end up with
// global subclass ids class*M + local. Solver failures carry the class id.
ClusterOutcome assign_subclass_labels(const Matrix& embeddings,
                                      const std::vector<int>& class_labels,
                                      const CenterBank& bank,
                                      const AssignSettings& settings);

// In-place EMA update of occupied centers followed by renormalization.
// Unoccupied centers are not touched at all.
void momentum_update(CenterBank& bank, const ClusterOutcome& outcome, double mu);

void save_center_bank(const CenterBank& bank, const std::string& path,
                      std::uint64_t seed, std::uint64_t step_count);

struct CenterBankFile {
  CenterBank bank;
  std::uint64_t seed = 0;
  std::uint64_t step_count = 0;
};

CenterBankFile load_center_bank(const std::string& path);

}  // namespace otseg
