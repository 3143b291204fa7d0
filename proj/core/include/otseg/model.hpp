#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otseg/matrix.hpp"

namespace otseg {

// Plain fully connected stack, ReLU between layers, linear output.
struct Mlp {
  std::vector<Matrix> weights;              // layer l: in x out
  std::vector<std::vector<double>> biases;  // layer l: out

  std::size_t layer_count() const { return weights.size(); }
  std::size_t in_dim() const { return weights.front().rows(); }
  std::size_t out_dim() const { return weights.back().cols(); }
};

// Per-point feature extractor plus segmentation head. The extractor maps each
// point's raw coordinates+auxiliary channels to a unit-norm embedding; the
// head maps embeddings to class logits. No neighborhood aggregation: small on
// purpose, the full training path still gets exercised.
struct Model {
  Mlp encoder;  // (3+aux) -> ... -> d, output L2-normalized afterwards
  Mlp head;     // d -> ... -> |C|

  std::size_t input_dim() const { return encoder.in_dim(); }
  std::size_t embed_dim() const { return encoder.out_dim(); }
  std::size_t class_count() const { return head.out_dim(); }
  std::size_t param_count() const;
};

Model init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t embed_dim, std::size_t head_hidden,
                 std::size_t class_count, std::uint64_t seed);

struct ForwardCache {
  std::vector<Matrix> enc_inputs;  // input to each encoder layer
  std::vector<Matrix> enc_pre;     // pre-activation of each encoder layer
  std::vector<Matrix> head_inputs;
  std::vector<Matrix> head_pre;
  std::vector<double> raw_norms;   // embedding row norms before normalization
  Matrix embeddings;               // unit rows (zero rows stay zero)
  Matrix logits;
  std::size_t zero_rows = 0;
  std::size_t batch = 0;
};

struct ForwardResult {
  Matrix embeddings;
  Matrix logits;
  ForwardCache cache;
};

ForwardResult forward(const Model& model, const Matrix& points);

struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

struct ModelGrads {
  MlpGrads encoder;
  MlpGrads head;
};

// Reverse-mode through head, normalization, and encoder. Both upstream paths
// feed in: grad_embeddings from the contrastive terms, grad_logits from the
// cross-entropy. Throws std::invalid_argument when the cache does not match
// the model or the gradient shapes.
ModelGrads backward(const Model& model, const ForwardCache& cache,
                    const Matrix& grad_embeddings, const Matrix& grad_logits);

void sgd_step(Model& model, const ModelGrads& grads, double learning_rate);

void save_checkpoint(const Model& model, const std::string& path,
                     const std::string& config_hash);

struct CheckpointFile {
  Model model;
  std::string config_hash;
};

CheckpointFile load_checkpoint(const std::string& path);

}  // namespace otseg
