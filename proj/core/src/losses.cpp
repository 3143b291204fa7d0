#include "otseg/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "otseg/numerics.hpp"

namespace otseg {

CeResult ce_loss(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows())
    throw std::invalid_argument("ce_loss: label count != row count");
  const std::size_t n = logits.rows(), c = logits.cols();
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
      throw std::invalid_argument("ce_loss: label out of range at row " +
                                  std::to_string(i));
  const Matrix lsm = stable_log_softmax_rows(logits);
  CeResult out;
  out.grad_logits = Matrix(n, c);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.value -= lsm(i, labels[i]);
    auto g = out.grad_logits.row(i);
    const auto l = lsm.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = std::exp(l[j]) * inv_n;
    g[labels[i]] -= inv_n;
  }
  out.value *= inv_n;
  return out;
}

PpcResult ppc_loss(const Matrix& anchors, const std::vector<int>& anchor_subclass,
                   const Matrix& pool, const std::vector<int>& pool_subclass,
                   double tau, const std::vector<int>& self_index, PpcMode mode) {
  if (!(tau > 0.0))
    throw std::invalid_argument("ppc_loss: tau must be positive, got " +
                                std::to_string(tau));
  if (anchor_subclass.size() != anchors.rows())
    throw std::invalid_argument("ppc_loss: anchor label count mismatch");
  if (pool_subclass.size() != pool.rows())
    throw std::invalid_argument("ppc_loss: pool label count mismatch");
  if (pool.rows() > 0 && pool.cols() != anchors.cols())
    throw std::invalid_argument("ppc_loss: pool dim != anchor dim");
  if (!self_index.empty() && self_index.size() != anchors.rows())
    throw std::invalid_argument("ppc_loss: self_index length mismatch");

  const std::size_t n_a = anchors.rows();
  const std::size_t n_p = pool.rows();
  const std::size_t d = anchors.cols();
  PpcResult out;
  out.grad_anchors = Matrix(n_a, d);
  if (n_a == 0) return out;
  if (n_p == 0) {
    out.skipped_anchors = n_a;
    return out;
  }

  const Matrix sims = matmul_nt(anchors, pool);
  const double inv_tau = 1.0 / tau;
  const double anchor_w = 1.0 / static_cast<double>(n_a);

  std::vector<double> scaled(n_p), expv(n_p), coeff(n_p);
  std::vector<std::size_t> positives, negatives;
  positives.reserve(n_p);
  negatives.reserve(n_p);

  for (std::size_t i = 0; i < n_a; ++i) {
    const int own = self_index.empty() ? -1 : self_index[i];
    positives.clear();
    negatives.clear();
    for (std::size_t j = 0; j < n_p; ++j) {
      if (static_cast<int>(j) == own) continue;
      if (pool_subclass[j] == anchor_subclass[i])
        positives.push_back(j);
      else
        negatives.push_back(j);
    }
    if (positives.empty()) {
      ++out.skipped_anchors;
      continue;
    }

    // shared max shift keeps every exp in range
    double mx = -1e300;
    const double* srow = sims.data() + i * n_p;
    for (std::size_t j : positives) mx = std::max(mx, srow[j] * inv_tau);
    for (std::size_t j : negatives) mx = std::max(mx, srow[j] * inv_tau);
    for (std::size_t j : positives) {
      scaled[j] = srow[j] * inv_tau - mx;
      expv[j] = std::exp(scaled[j]);
    }
    double neg_sum = 0.0;
    for (std::size_t j : negatives) {
      scaled[j] = srow[j] * inv_tau - mx;
      expv[j] = std::exp(scaled[j]);
      neg_sum += expv[j];
    }

    const double inv_pos = 1.0 / static_cast<double>(positives.size());
    double value_i = 0.0;
    for (std::size_t j = 0; j < n_p; ++j) coeff[j] = 0.0;

    if (mode == PpcMode::kExclusive) {
      double inv_denom_sum = 0.0;
      for (std::size_t j : positives) {
        const double denom = expv[j] + neg_sum;
        value_i += std::log(denom) - scaled[j];
        coeff[j] += (expv[j] / denom - 1.0) * inv_pos;
        inv_denom_sum += inv_pos / denom;
      }
      for (std::size_t j : negatives) coeff[j] += expv[j] * inv_denom_sum;
    } else {
      double denom = neg_sum;
      for (std::size_t j : positives) denom += expv[j];
      const double log_denom = std::log(denom);
      for (std::size_t j : positives) {
        value_i += log_denom - scaled[j];
        coeff[j] -= inv_pos;
      }
      for (std::size_t j : positives) coeff[j] += expv[j] / denom;
      for (std::size_t j : negatives) coeff[j] += expv[j] / denom;
    }

    out.value += value_i * inv_pos * anchor_w;
    auto grad = out.grad_anchors.row(i);
    const double scale = anchor_w * inv_tau;
    for (std::size_t j : positives) {
      const double w = coeff[j] * scale;
      const double* x = pool.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) grad[k] += w * x[k];
    }
    for (std::size_t j : negatives) {
      const double w = coeff[j] * scale;
      const double* x = pool.data() + j * d;
      for (std::size_t k = 0; k < d; ++k) grad[k] += w * x[k];
    }
  }
  return out;
}

PccResult pcc_loss(const Matrix& embeddings, const std::vector<int>& global_subclass,
                   const CenterBank& bank, double tau) {
  if (!(tau > 0.0))
    throw std::invalid_argument("pcc_loss: tau must be positive, got " +
                                std::to_string(tau));
  if (global_subclass.size() != embeddings.rows())
    throw std::invalid_argument("pcc_loss: label count != row count");
  if (embeddings.cols() != bank.dim)
    throw std::invalid_argument("pcc_loss: embedding dim != center dim");
  const std::size_t n = embeddings.rows();
  const std::size_t k = bank.subclass_count();
  for (std::size_t i = 0; i < n; ++i)
    if (global_subclass[i] < 0 || static_cast<std::size_t>(global_subclass[i]) >= k)
      throw std::invalid_argument("pcc_loss: subclass label out of range at row " +
                                  std::to_string(i));

  PccResult out;
  out.grad_embeddings = Matrix(n, bank.dim);
  if (n == 0) return out;

  Matrix logits = matmul_nt(embeddings, bank.centers);
  const double inv_tau = 1.0 / tau;
  for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] *= inv_tau;
  const Matrix lsm = stable_log_softmax_rows(logits);

  const double inv_n = 1.0 / static_cast<double>(n);
  const double scale = inv_n * inv_tau;
  for (std::size_t i = 0; i < n; ++i) {
    out.value -= lsm(i, global_subclass[i]);
    auto grad = out.grad_embeddings.row(i);
    const auto l = lsm.row(i);
    for (std::size_t g = 0; g < k; ++g) {
      const double w =
          (std::exp(l[g]) - (static_cast<int>(g) == global_subclass[i] ? 1.0 : 0.0)) *
          scale;
      const double* q = bank.centers.data() + g * bank.dim;
      for (std::size_t didx = 0; didx < bank.dim; ++didx) grad[didx] += w * q[didx];
    }
  }
  out.value *= inv_n;
  return out;
}

LossReport total_loss(const CeResult& ce, const PpcResult& ppc,
                      const PccResult& pcc, double alpha, double tau) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("total_loss: alpha must be nonnegative, got " +
                                std::to_string(alpha));
  LossReport report;
  report.ce = ce.value;
  report.ppc = ppc.value;
  report.pcc = pcc.value;
  report.alpha = alpha;
  report.tau = tau;
  report.total = ce.value + alpha * (ppc.value + pcc.value);
  report.skipped_anchors = ppc.skipped_anchors;
  report.grad_logits = ce.grad_logits;

  const Matrix* a = ppc.grad_anchors.empty() ? nullptr : &ppc.grad_anchors;
  const Matrix* b = pcc.grad_embeddings.empty() ? nullptr : &pcc.grad_embeddings;
  if (a && b && (a->rows() != b->rows() || a->cols() != b->cols()))
    throw std::invalid_argument("total_loss: contrastive gradient shapes differ");
  const Matrix* shape = a ? a : b;
  if (shape) {
    report.grad_embeddings = Matrix(shape->rows(), shape->cols());
    for (std::size_t i = 0; i < report.grad_embeddings.size(); ++i) {
      double g = 0.0;
      if (a) g += a->data()[i];
      if (b) g += b->data()[i];
      report.grad_embeddings.data()[i] = alpha * g;
    }
  }
  return report;
}

}  // namespace otseg
