#include "otseg/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "otseg/errors.hpp"

namespace otseg {

namespace toml {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const std::string& path, std::size_t line,
                       const std::string& detail) {
  throw ConfigError(path + ":" + std::to_string(line) + ": " + detail);
}

Value parse_scalar(std::string text, const std::string& path, std::size_t line) {
  Value v;
  v.line = line;
  text = trim(text);
  if (text.empty()) fail(path, line, "missing value");

  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      fail(path, line, "unterminated string");
    v.kind = Value::Kind::kString;
    v.as_string = text.substr(1, text.size() - 2);
    if (v.as_string.find('"') != std::string::npos)
      fail(path, line, "escapes and embedded quotes are not supported");
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = Value::Kind::kBool;
    v.as_bool = text == "true";
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']') fail(path, line, "unterminated array");
    v.kind = Value::Kind::kIntArray;
    std::string inner = trim(text.substr(1, text.size() - 2));
    if (inner.empty()) return v;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      char* end = nullptr;
      errno = 0;
      const long long x = std::strtoll(item.c_str(), &end, 10);
      if (item.empty() || end != item.c_str() + item.size() || errno == ERANGE)
        fail(path, line, "array elements must be integers, got '" + item + "'");
      v.as_array.push_back(x);
    }
    return v;
  }

  const bool looks_float = text.find_first_of(".eE") != std::string::npos &&
                           text.find("0x") != 0;
  char* end = nullptr;
  errno = 0;
  if (!looks_float) {
    const long long x = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() + text.size() && errno != ERANGE) {
      v.kind = Value::Kind::kInt;
      v.as_int = x;
      return v;
    }
  }
  errno = 0;
  const double d = std::strtod(text.c_str(), &end);
  if (end == text.c_str() + text.size() && errno != ERANGE) {
    v.kind = Value::Kind::kFloat;
    v.as_float = d;
    return v;
  }
  fail(path, line, "cannot parse value '" + text + "'");
}

}  // namespace

std::map<std::string, Value> parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::map<std::string, Value> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    // strip comments, but not inside quoted strings
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[')
      fail(path, line_no, "sections are not supported in this config format");
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(path, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(path, line_no, "empty key");
    for (char c : key)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
        fail(path, line_no, "invalid key '" + key + "'");
    if (out.count(key)) fail(path, line_no, "duplicate key '" + key + "'");
    out[key] = parse_scalar(line.substr(eq + 1), path, line_no);
  }
  return out;
}

}  // namespace toml

namespace {

using toml::Value;

class Reader {
 public:
  Reader(std::map<std::string, Value> values, std::string path)
      : values_(std::move(values)), path_(std::move(path)) {}

  bool has(const std::string& key) {
    return values_.find(key) != values_.end();
  }

  template <typename T>
  void take_count(const std::string& key, T& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind != Value::Kind::kInt || it->second.as_int < 0)
      fail(it->second.line, key + " must be a nonnegative integer");
    out = static_cast<T>(it->second.as_int);
  }

  void take_u64(const std::string& key, std::uint64_t& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind != Value::Kind::kInt || it->second.as_int < 0)
      fail(it->second.line, key + " must be a nonnegative integer");
    out = static_cast<std::uint64_t>(it->second.as_int);
  }

  void take_real(const std::string& key, double& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind == Value::Kind::kFloat)
      out = it->second.as_float;
    else if (it->second.kind == Value::Kind::kInt)
      out = static_cast<double>(it->second.as_int);
    else
      fail(it->second.line, key + " must be a number");
  }

  void take_bool(const std::string& key, bool& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind != Value::Kind::kBool)
      fail(it->second.line, key + " must be true or false");
    out = it->second.as_bool;
  }

  void take_string(const std::string& key, std::string& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind != Value::Kind::kString)
      fail(it->second.line, key + " must be a quoted string");
    out = it->second.as_string;
  }

  void take_counts(const std::string& key, std::vector<std::size_t>& out) {
    auto it = claim(key);
    if (it == values_.end()) return;
    if (it->second.kind != Value::Kind::kIntArray)
      fail(it->second.line, key + " must be an array of integers");
    out.clear();
    for (auto x : it->second.as_array) {
      if (x < 0) fail(it->second.line, key + " entries must be nonnegative");
      out.push_back(static_cast<std::size_t>(x));
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_)
      if (!claimed_.count(key))
        throw ConfigError(path_ + ":" + std::to_string(value.line) +
                          ": unknown key '" + key + "'");
  }

 private:
  std::map<std::string, Value>::iterator claim(const std::string& key) {
    claimed_.insert(key);
    return values_.find(key);
  }

  [[noreturn]] void fail(std::size_t line, const std::string& detail) const {
    throw ConfigError(path_ + ":" + std::to_string(line) + ": " + detail);
  }

  std::map<std::string, Value> values_;
  std::set<std::string> claimed_;
  std::string path_;
};

}  // namespace

PpcMode TrainConfig::ppc_mode() const {
  return ppc_denominator_mode == "masked_mean" ? PpcMode::kMaskedMean
                                               : PpcMode::kExclusive;
}

TrainConfig load_train_config(const std::string& path) {
  Reader reader(toml::parse_file(path), path);
  TrainConfig c;
  reader.take_count("clusters_per_class", c.clusters_per_class);
  reader.take_real("mu", c.mu);
  reader.take_real("lambda", c.lambda);
  reader.take_real("tau", c.tau);
  reader.take_real("alpha", c.alpha);
  reader.take_count("per_scene_cap", c.per_scene_cap);
  reader.take_count("scenes_per_step", c.scenes_per_step);
  reader.take_count("epochs", c.epochs);
  reader.take_real("learning_rate", c.learning_rate);
  reader.take_u64("seed", c.seed);
  reader.take_bool("disable_ppc", c.disable_ppc);
  reader.take_bool("disable_pcc", c.disable_pcc);
  reader.take_bool("disable_bank", c.disable_bank);
  reader.take_string("ppc_denominator_mode", c.ppc_denominator_mode);
  reader.take_count("warmup_steps", c.warmup_steps);
  reader.take_count("negative_pool_cap", c.negative_pool_cap);
  reader.take_count("embed_dim", c.embed_dim);
  reader.take_counts("hidden_widths", c.hidden_widths);
  reader.take_count("head_hidden", c.head_hidden);
  reader.take_count("sinkhorn_max_iters", c.sinkhorn_max_iters);
  reader.take_real("sinkhorn_tolerance", c.sinkhorn_tolerance);
  reader.reject_unknown();

  if (const char* env = std::getenv("OTSEG_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*env == '\0' || end == env || *end != '\0' || errno == ERANGE)
      throw ConfigError("OTSEG_SEED: cannot parse '" + std::string(env) +
                        "' as an unsigned integer");
    c.seed = v;
  }
  validate(c);
  return c;
}

void validate(const TrainConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(c.clusters_per_class >= 1, "clusters_per_class must be at least 1");
  require(c.mu >= 0.0 && c.mu <= 1.0, "mu must lie in [0,1]");
  require(c.lambda > 0.0, "lambda must be positive");
  require(c.tau > 0.0, "tau must be positive");
  require(c.alpha >= 0.0, "alpha must be nonnegative");
  require(c.scenes_per_step >= 1, "scenes_per_step must be at least 1");
  require(c.epochs >= 1, "epochs must be at least 1");
  require(c.learning_rate >= 0.0, "learning_rate must be nonnegative");
  require(c.embed_dim >= 1, "embed_dim must be at least 1");
  for (std::size_t h : c.hidden_widths)
    require(h >= 1, "hidden_widths entries must be at least 1");
  require(c.hidden_widths.size() <= 8, "hidden_widths supports at most 8 layers");
  require(c.sinkhorn_max_iters >= 1, "sinkhorn_max_iters must be at least 1");
  require(c.sinkhorn_tolerance > 0.0, "sinkhorn_tolerance must be positive");
  require(c.ppc_denominator_mode == "exclusive" ||
              c.ppc_denominator_mode == "masked_mean",
          "ppc_denominator_mode must be \"exclusive\" or \"masked_mean\"");
}

SynthSpec load_synth_spec(const std::string& path) {
  Reader reader(toml::parse_file(path), path);
  SynthSpec s;
  reader.take_count("class_count", s.class_count);
  reader.take_count("modes_per_class", s.modes_per_class);
  reader.take_count("points_per_mode", s.points_per_mode);
  reader.take_real("mode_separation", s.mode_separation);
  reader.take_real("noise_sigma", s.noise_sigma);
  reader.take_u64("seed", s.seed);
  reader.take_count("scene_count", s.scene_count);
  reader.take_count("aux_count", s.aux_count);
  reader.reject_unknown();
  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return s;
}

std::string config_hash(const TrainConfig& c) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "alpha=" << c.alpha << ";clusters_per_class=" << c.clusters_per_class
     << ";disable_bank=" << c.disable_bank << ";disable_pcc=" << c.disable_pcc
     << ";disable_ppc=" << c.disable_ppc << ";embed_dim=" << c.embed_dim
     << ";epochs=" << c.epochs << ";head_hidden=" << c.head_hidden
     << ";hidden_widths=";
  for (std::size_t h : c.hidden_widths) ss << h << ",";
  ss << ";lambda=" << c.lambda << ";learning_rate=" << c.learning_rate
     << ";mu=" << c.mu << ";negative_pool_cap=" << c.negative_pool_cap
     << ";per_scene_cap=" << c.per_scene_cap
     << ";ppc_denominator_mode=" << c.ppc_denominator_mode
     << ";scenes_per_step=" << c.scenes_per_step << ";seed=" << c.seed
     << ";sinkhorn_max_iters=" << c.sinkhorn_max_iters
     << ";sinkhorn_tolerance=" << c.sinkhorn_tolerance << ";tau=" << c.tau
     << ";warmup_steps=" << c.warmup_steps;
  const std::string canon = ss.str();
  // FNV-1a, printed as fixed-width hex
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace otseg
