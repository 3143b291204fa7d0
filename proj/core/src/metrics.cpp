#include "otseg/metrics.hpp"

#include <stdexcept>
#include <string>

namespace otseg {

namespace {

std::vector<std::size_t> confusion(const std::vector<int>& pred,
                                   const std::vector<int>& truth,
                                   std::size_t class_count) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("metrics: prediction count " +
                                std::to_string(pred.size()) + " != truth count " +
                                std::to_string(truth.size()));
  std::vector<std::size_t> counts(class_count * class_count, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int p = pred[i], t = truth[i];
    if (p < 0 || static_cast<std::size_t>(p) >= class_count ||
        t < 0 || static_cast<std::size_t>(t) >= class_count)
      throw std::invalid_argument("metrics: label out of range at index " +
                                  std::to_string(i));
    ++counts[static_cast<std::size_t>(t) * class_count + p];
  }
  return counts;
}

}  // namespace

IouReport miou(const std::vector<int>& pred, const std::vector<int>& truth,
               std::size_t class_count) {
  const auto counts = confusion(pred, truth, class_count);
  IouReport out;
  out.per_class_iou.assign(class_count, -1.0);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    const std::size_t tp = counts[c * class_count + c];
    std::size_t fn = 0, fp = 0;
    for (std::size_t j = 0; j < class_count; ++j) {
      if (j == c) continue;
      fn += counts[c * class_count + j];
      fp += counts[j * class_count + c];
    }
    const std::size_t denom = tp + fp + fn;
    if (denom == 0) continue;  // class in neither prediction nor truth
    out.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
    sum += out.per_class_iou[c];
    ++present;
  }
  out.miou = present ? sum / static_cast<double>(present) : 0.0;
  return out;
}

double macc(const std::vector<int>& pred, const std::vector<int>& truth,
            std::size_t class_count) {
  const auto counts = confusion(pred, truth, class_count);
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    std::size_t row = 0;
    for (std::size_t j = 0; j < class_count; ++j) row += counts[c * class_count + j];
    if (row == 0) continue;
    sum += static_cast<double>(counts[c * class_count + c]) /
           static_cast<double>(row);
    ++present;
  }
  return present ? sum / static_cast<double>(present) : 0.0;
}

}  // namespace otseg
