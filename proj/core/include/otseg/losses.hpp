#pragma once

#include <cstddef>
#include <vector>

#include "otseg/cluster.hpp"
#include "otseg/matrix.hpp"

namespace otseg {

struct CeResult {
  double value = 0.0;
  Matrix grad_logits;  // N x |C|
};

// Mean cross-entropy over points; gradient is (softmax - onehot)/N.
CeResult ce_loss(const Matrix& logits, const std::vector<int>& labels);

// How the point-point denominator is built.
//   kExclusive   : each positive competes only against itself plus all
//                  negatives (the default).
//   kMaskedMean  : each positive competes against every other pool entry,
//                  other positives included (generic supervised-contrastive).
// Self pairs are excluded in both modes.
enum class PpcMode { kExclusive, kMaskedMean };

struct PpcResult {
  double value = 0.0;
  Matrix grad_anchors;  // N x d; pool rows are treated as constants
  std::size_t skipped_anchors = 0;  // anchors with no positive in the pool
};

// Point-point contrast. `self_index[i]`, when provided, names the pool row
// holding anchor i itself (-1 when the anchor is not in the pool); that row is
// never used as its own positive or negative. Anchors without positives
// contribute zero and are tallied, not raised.
PpcResult ppc_loss(const Matrix& anchors, const std::vector<int>& anchor_subclass,
                   const Matrix& pool, const std::vector<int>& pool_subclass,
                   double tau, const std::vector<int>& self_index = {},
                   PpcMode mode = PpcMode::kExclusive);

struct PccResult {
  double value = 0.0;
  Matrix grad_embeddings;  // N x d; centers are treated as constants
};

// Point-center contrast: softmax cross-entropy of each point against all
// centers of all classes, with the point's own subclass center as the target.
PccResult pcc_loss(const Matrix& embeddings, const std::vector<int>& global_subclass,
                   const CenterBank& bank, double tau);

struct LossReport {
  double ce = 0.0;
  double ppc = 0.0;
  double pcc = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  Matrix grad_logits;      // N x |C|
  Matrix grad_embeddings;  // N x d
  std::size_t skipped_anchors = 0;
};

// total = ce + alpha * (ppc + pcc), with gradients combined the same way.
LossReport total_loss(const CeResult& ce, const PpcResult& ppc,
                      const PccResult& pcc, double alpha, double tau);

}  // namespace otseg
