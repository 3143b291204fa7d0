#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otseg/losses.hpp"
#include "otseg/synth.hpp"

namespace otseg {

// Training knobs. TOML keys are exactly these field names; unknown keys are
// rejected so typos fail loudly instead of silently running defaults.
struct TrainConfig {
  std::size_t clusters_per_class = 40;  // M
  double mu = 0.9999;                   // center momentum
  double lambda = 25.0;                 // transport sharpness
  double tau = 0.1;                     // contrastive temperature
  double alpha = 1.0;                   // weight of the contrastive terms
  std::size_t per_scene_cap = 10;       // memory bank rows kept per subclass+scene
  std::size_t scenes_per_step = 2;
  std::size_t epochs = 1;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  bool disable_ppc = false;
  bool disable_pcc = false;
  bool disable_bank = false;
  std::string ppc_denominator_mode = "exclusive";  // or "masked_mean"
  std::size_t warmup_steps = 0;         // steps trained with cross-entropy only
  std::size_t negative_pool_cap = 512;
  std::size_t embed_dim = 16;
  // wide by default: the encoder stands in for a real backbone, and the
  // contrastive extras are supposed to be cheap relative to it
  std::vector<std::size_t> hidden_widths = {320, 320};
  std::size_t head_hidden = 0;          // 0 = plain affine head
  std::size_t sinkhorn_max_iters = 100;
  double sinkhorn_tolerance = 1e-8;

  PpcMode ppc_mode() const;
};

// Reads TOML, applies the OTSEG_SEED environment override, validates ranges.
// Throws ConfigError on anything suspect.
TrainConfig load_train_config(const std::string& path);
void validate(const TrainConfig& config);

// Same flat-TOML format, keys matching SynthSpec field names.
SynthSpec load_synth_spec(const std::string& path);

// Stable fingerprint of a resolved config, recorded in checkpoint sidecars.
std::string config_hash(const TrainConfig& config);

namespace toml {

// Minimal flat TOML: `key = value` lines, #-comments, values of type integer,
// float, boolean, string, or array of integers. No sections, no nesting.
struct Value {
  enum class Kind { kInt, kFloat, kBool, kString, kIntArray } kind;
  std::int64_t as_int = 0;
  double as_float = 0.0;
  bool as_bool = false;
  std::string as_string;
  std::vector<std::int64_t> as_array;
  std::size_t line = 0;
};

std::map<std::string, Value> parse_file(const std::string& path);

}  // namespace toml

}  // namespace otseg
