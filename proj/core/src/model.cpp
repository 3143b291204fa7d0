#include "otseg/model.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "otseg/binio.hpp"
#include "otseg/errors.hpp"
#include "otseg/rng.hpp"

namespace otseg {

namespace {

constexpr char kMagic[5] = "TMDL";
constexpr std::uint32_t kVersion = 1;

Mlp init_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
  Mlp mlp;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    const bool last = l + 2 == widths.size();
    const double scale = std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(in));
    Matrix w(in, out);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal() * scale;
    mlp.weights.push_back(std::move(w));
    mlp.biases.emplace_back(out, 0.0);
  }
  return mlp;
}

// ReLU between layers, linear output; caches layer inputs and pre-activations.
Matrix mlp_forward(const Mlp& mlp, const Matrix& x, std::vector<Matrix>& inputs,
                   std::vector<Matrix>& pre) {
  inputs.clear();
  pre.clear();
  Matrix a = x;
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    inputs.push_back(a);
    Matrix z = matmul(a, mlp.weights[l]);
    const auto& b = mlp.biases[l];
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < z.cols(); ++j) row[j] += b[j];
    }
    pre.push_back(z);
    if (l + 1 == mlp.layer_count()) {
      a = std::move(z);
    } else {
      a = z;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data()[i] < 0.0) a.data()[i] = 0.0;
    }
  }
  return a;
}

// Returns the gradient w.r.t. the stack input.
Matrix mlp_backward(const Mlp& mlp, const std::vector<Matrix>& inputs,
                    const std::vector<Matrix>& pre, Matrix grad_out,
                    MlpGrads& grads) {
  grads.weights.resize(mlp.layer_count());
  grads.biases.resize(mlp.layer_count());
  for (std::size_t li = mlp.layer_count(); li-- > 0;) {
    Matrix grad_z = std::move(grad_out);
    if (li + 1 < mlp.layer_count()) {
      // upstream layer saw relu(pre); kill gradients where the unit was off
      const Matrix& z = pre[li];
      for (std::size_t i = 0; i < grad_z.size(); ++i)
        if (z.data()[i] <= 0.0) grad_z.data()[i] = 0.0;
    }
    grads.weights[li] = matmul_tn(inputs[li], grad_z);
    auto& gb = grads.biases[li];
    gb.assign(mlp.biases[li].size(), 0.0);
    for (std::size_t i = 0; i < grad_z.rows(); ++i) {
      const auto row = grad_z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) gb[j] += row[j];
    }
    grad_out = matmul_nt(grad_z, mlp.weights[li]);
  }
  return grad_out;
}

void check_mlp_cache(const Mlp& mlp, const std::vector<Matrix>& inputs,
                     const std::vector<Matrix>& pre, std::size_t batch,
                     const char* which) {
  if (inputs.size() != mlp.layer_count() || pre.size() != mlp.layer_count())
    throw std::invalid_argument(std::string("backward: cache layer count does "
                                            "not match ") + which);
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    if (inputs[l].rows() != batch || inputs[l].cols() != mlp.weights[l].rows() ||
        pre[l].rows() != batch || pre[l].cols() != mlp.weights[l].cols())
      throw std::invalid_argument(std::string("backward: cache shape does not "
                                              "match ") + which + " layer " +
                                  std::to_string(l));
  }
}

}  // namespace

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& w : encoder.weights) n += w.size();
  for (const auto& b : encoder.biases) n += b.size();
  for (const auto& w : head.weights) n += w.size();
  for (const auto& b : head.biases) n += b.size();
  return n;
}

Model init_model(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                 std::size_t embed_dim, std::size_t head_hidden,
                 std::size_t class_count, std::uint64_t seed) {
  if (input_dim == 0 || embed_dim == 0 || class_count == 0)
    throw std::invalid_argument("init_model: dimensions must be positive");
  for (std::size_t h : hidden)
    if (h == 0) throw std::invalid_argument("init_model: zero hidden width");

  std::vector<std::size_t> enc_widths;
  enc_widths.push_back(input_dim);
  enc_widths.insert(enc_widths.end(), hidden.begin(), hidden.end());
  enc_widths.push_back(embed_dim);

  std::vector<std::size_t> head_widths;
  head_widths.push_back(embed_dim);
  if (head_hidden > 0) head_widths.push_back(head_hidden);
  head_widths.push_back(class_count);

  Model model;
  Rng enc_rng(Rng::derive(seed, 0x6d6f64656c01ULL));
  Rng head_rng(Rng::derive(seed, 0x6d6f64656c02ULL));
  model.encoder = init_mlp(enc_widths, enc_rng);
  model.head = init_mlp(head_widths, head_rng);
  return model;
}

ForwardResult forward(const Model& model, const Matrix& points) {
  if (points.cols() != model.input_dim())
    throw std::invalid_argument("forward: point dim " +
                                std::to_string(points.cols()) +
                                " != model input dim " +
                                std::to_string(model.input_dim()));
  ForwardResult out;
  auto& cache = out.cache;
  cache.batch = points.rows();

  Matrix raw = mlp_forward(model.encoder, points, cache.enc_inputs, cache.enc_pre);

  cache.raw_norms.assign(raw.rows(), 0.0);
  cache.embeddings = raw;
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    double sq = 0.0;
    for (double x : raw.row(i)) sq += x * x;
    if (sq == 0.0) {
      ++cache.zero_rows;
      continue;
    }
    const double norm = std::sqrt(sq);
    cache.raw_norms[i] = norm;
    const double inv = 1.0 / norm;
    for (double& x : cache.embeddings.row(i)) x *= inv;
  }

  cache.logits =
      mlp_forward(model.head, cache.embeddings, cache.head_inputs, cache.head_pre);
  out.embeddings = cache.embeddings;
  out.logits = cache.logits;
  return out;
}

ModelGrads backward(const Model& model, const ForwardCache& cache,
                    const Matrix& grad_embeddings, const Matrix& grad_logits) {
  const std::size_t batch = cache.batch;
  check_mlp_cache(model.encoder, cache.enc_inputs, cache.enc_pre, batch, "encoder");
  check_mlp_cache(model.head, cache.head_inputs, cache.head_pre, batch, "head");
  if (cache.embeddings.rows() != batch ||
      cache.embeddings.cols() != model.embed_dim() ||
      cache.raw_norms.size() != batch)
    throw std::invalid_argument("backward: embedding cache does not match model");
  if (!grad_logits.empty() &&
      (grad_logits.rows() != batch || grad_logits.cols() != model.class_count()))
    throw std::invalid_argument("backward: grad_logits shape mismatch");
  if (!grad_embeddings.empty() &&
      (grad_embeddings.rows() != batch ||
       grad_embeddings.cols() != model.embed_dim()))
    throw std::invalid_argument("backward: grad_embeddings shape mismatch");

  ModelGrads grads;
  Matrix grad_embed_total(batch, model.embed_dim());
  if (!grad_logits.empty()) {
    grad_embed_total = mlp_backward(model.head, cache.head_inputs, cache.head_pre,
                                    grad_logits, grads.head);
  } else {
    grads.head.weights.resize(model.head.layer_count());
    grads.head.biases.resize(model.head.layer_count());
    for (std::size_t l = 0; l < model.head.layer_count(); ++l) {
      grads.head.weights[l] =
          Matrix(model.head.weights[l].rows(), model.head.weights[l].cols());
      grads.head.biases[l].assign(model.head.biases[l].size(), 0.0);
    }
  }
  if (!grad_embeddings.empty())
    for (std::size_t i = 0; i < grad_embed_total.size(); ++i)
      grad_embed_total.data()[i] += grad_embeddings.data()[i];

  // through z = u/|u|:  du = (dz - (dz.z) z)/|u|;  zero rows got no z, pass 0
  Matrix grad_raw(batch, model.embed_dim());
  for (std::size_t i = 0; i < batch; ++i) {
    const double norm = cache.raw_norms[i];
    if (norm == 0.0) continue;
    const auto z = cache.embeddings.row(i);
    const auto dz = grad_embed_total.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) dot += dz[j] * z[j];
    auto du = grad_raw.row(i);
    const double inv = 1.0 / norm;
    for (std::size_t j = 0; j < z.size(); ++j) du[j] = (dz[j] - dot * z[j]) * inv;
  }

  mlp_backward(model.encoder, cache.enc_inputs, cache.enc_pre, std::move(grad_raw),
               grads.encoder);
  return grads;
}

void sgd_step(Model& model, const ModelGrads& grads, double learning_rate) {
  if (!(learning_rate >= 0.0))
    throw std::invalid_argument("sgd_step: learning rate must be nonnegative");
  auto apply = [learning_rate](Mlp& mlp, const MlpGrads& g, const char* which) {
    if (g.weights.size() != mlp.layer_count() || g.biases.size() != mlp.layer_count())
      throw std::invalid_argument(std::string("sgd_step: gradient layout does "
                                              "not match ") + which);
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
      if (g.weights[l].rows() != mlp.weights[l].rows() ||
          g.weights[l].cols() != mlp.weights[l].cols() ||
          g.biases[l].size() != mlp.biases[l].size())
        throw std::invalid_argument(std::string("sgd_step: gradient shape does "
                                                "not match ") + which);
      for (std::size_t i = 0; i < mlp.weights[l].size(); ++i)
        mlp.weights[l].data()[i] -= learning_rate * g.weights[l].data()[i];
      for (std::size_t i = 0; i < mlp.biases[l].size(); ++i)
        mlp.biases[l][i] -= learning_rate * g.biases[l][i];
    }
  };
  apply(model.encoder, grads.encoder, "encoder");
  apply(model.head, grads.head, "head");
}

namespace {

void put_mlp_shapes(std::ostream& os, const Mlp& mlp) {
  binio::put_u32(os, static_cast<std::uint32_t>(mlp.layer_count()));
  for (const auto& w : mlp.weights) {
    binio::put_u32(os, static_cast<std::uint32_t>(w.rows()));
    binio::put_u32(os, static_cast<std::uint32_t>(w.cols()));
  }
}

void put_mlp_params(std::ostream& os, const Mlp& mlp) {
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    for (std::size_t i = 0; i < mlp.weights[l].size(); ++i)
      binio::put_f64(os, mlp.weights[l].data()[i]);
    for (double b : mlp.biases[l]) binio::put_f64(os, b);
  }
}

Mlp get_mlp_shapes(std::istream& is, const std::string& path) {
  const std::size_t layers = binio::get_u32(is, "layer count");
  if (layers == 0) throw IoError(path + ": checkpoint with zero layers");
  Mlp mlp;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = binio::get_u32(is, "layer rows");
    const std::size_t out = binio::get_u32(is, "layer cols");
    if (in == 0 || out == 0) throw IoError(path + ": zero layer dimension");
    mlp.weights.emplace_back(in, out);
    mlp.biases.emplace_back(out, 0.0);
  }
  return mlp;
}

void get_mlp_params(std::istream& is, Mlp& mlp) {
  for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
    for (std::size_t i = 0; i < mlp.weights[l].size(); ++i)
      mlp.weights[l].data()[i] = binio::get_f64(is, "weights");
    for (double& b : mlp.biases[l]) b = binio::get_f64(is, "bias");
  }
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path,
                     const std::string& config_hash) {
  auto os = binio::open_out(path);
  binio::put_magic(os, kMagic);
  binio::put_u32(os, kVersion);
  put_mlp_shapes(os, model.encoder);
  put_mlp_shapes(os, model.head);
  put_mlp_params(os, model.encoder);
  put_mlp_params(os, model.head);
  if (!os) throw IoError("failed writing " + path);
  os.close();

  nlohmann::ordered_json side;
  side["config_hash"] = config_hash;
  std::ofstream js(path + ".json", std::ios::trunc);
  if (!js) throw IoError("cannot open " + path + ".json for writing");
  js << side.dump(2) << "\n";
}

CheckpointFile load_checkpoint(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kMagic, path);
  const auto version = binio::get_u32(is, "version");
  if (version != kVersion)
    throw IoError(path + ": unsupported checkpoint version " +
                  std::to_string(version));
  CheckpointFile out;
  out.model.encoder = get_mlp_shapes(is, path);
  out.model.head = get_mlp_shapes(is, path);
  get_mlp_params(is, out.model.encoder);
  get_mlp_params(is, out.model.head);
  for (std::size_t l = 0; l + 1 < out.model.encoder.layer_count(); ++l)
    if (out.model.encoder.weights[l].cols() !=
        out.model.encoder.weights[l + 1].rows())
      throw IoError(path + ": inconsistent encoder layer shapes");
  for (std::size_t l = 0; l + 1 < out.model.head.layer_count(); ++l)
    if (out.model.head.weights[l].cols() != out.model.head.weights[l + 1].rows())
      throw IoError(path + ": inconsistent head layer shapes");
  if (out.model.encoder.out_dim() != out.model.head.in_dim())
    throw IoError(path + ": encoder output dim != head input dim");

  std::ifstream js(path + ".json");
  if (js) {
    nlohmann::json side;
    try {
      js >> side;
      out.config_hash = side.value("config_hash", std::string{});
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ".json: " + e.what());
    }
  }
  return out;
}

}  // namespace otseg
