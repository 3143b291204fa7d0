#pragma once

#include <cstddef>
#include <vector>

namespace otseg {

struct IouReport {
  double miou = 0.0;
  // Per-class IoU; -1 marks classes absent from both prediction and truth,
  // which are excluded from the mean.
  std::vector<double> per_class_iou;
};

IouReport miou(const std::vector<int>& pred, const std::vector<int>& truth,
               std::size_t class_count);

// Mean recall over classes that appear in the truth labels.
double macc(const std::vector<int>& pred, const std::vector<int>& truth,
            std::size_t class_count);

}  // namespace otseg
