#include "otseg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "otseg/errors.hpp"
#include "otseg/projection.hpp"

namespace otseg {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

constexpr std::uint64_t kModelStream = 1;
constexpr std::uint64_t kCenterStream = 2;
constexpr std::uint64_t kBankStream = 3;
constexpr std::uint64_t kShuffleStream = 4;
constexpr std::uint64_t kPoolStream = 5;

std::ofstream open_text(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

void format_double(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  out += buf;
}

}  // namespace

std::string trace_json_line(const StepTrace& t) {
  nlohmann::ordered_json j;
  j["v"] = 1;
  j["step"] = t.step;
  j["ce"] = t.ce;
  j["ppc"] = t.ppc;
  j["pcc"] = t.pcc;
  j["total"] = t.total;
  j["alpha"] = t.alpha;
  j["tau"] = t.tau;
  j["skipped_anchors"] = t.skipped_anchors;
  j["occupancy"] = t.occupancy;
  return j.dump();
}

std::string timing_json_line(const StepTrace& t) {
  nlohmann::ordered_json j;
  j["step"] = t.step;
  j["clustering_ms"] = t.clustering_ms;
  j["step_ms"] = t.step_ms;
  return j.dump();
}

std::string metrics_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["miou"] = report.miou;
  j["macc"] = report.macc;
  j["per_class_iou"] = report.per_class_iou;
  j["point_count"] = report.point_count;
  return j.dump();
}

SceneShape scene_shape(const std::vector<Scene>& scenes) {
  if (scenes.empty()) throw ConfigError("no scenes given");
  SceneShape shape;
  shape.class_count = scenes.front().class_count;
  shape.input_dim = scenes.front().points.cols();
  for (const auto& s : scenes) {
    if (s.class_count != shape.class_count)
      throw ConfigError("scene " + std::to_string(s.id) + " declares " +
                        std::to_string(s.class_count) + " classes, expected " +
                        std::to_string(shape.class_count));
    if (s.points.cols() != shape.input_dim)
      throw ConfigError("scene " + std::to_string(s.id) + " has " +
                        std::to_string(s.points.cols()) +
                        " channels per point, expected " +
                        std::to_string(shape.input_dim));
  }
  return shape;
}

TrainConfig Trainer::checked(TrainConfig config) {
  validate(config);
  return config;
}

Trainer::Trainer(TrainConfig config, std::vector<Scene> scenes)
    : config_(checked(std::move(config))),
      scenes_(std::move(scenes)),
      shape_(scene_shape(scenes_)),
      model_(init_model(shape_.input_dim, config_.hidden_widths, config_.embed_dim,
                        config_.head_hidden, shape_.class_count,
                        Rng::derive(config_.seed, kModelStream))),
      centers_(init_centers(shape_.class_count, config_.clusters_per_class,
                            config_.embed_dim,
                            Rng::derive(config_.seed, kCenterStream))),
      bank_(shape_.class_count * config_.clusters_per_class, config_.embed_dim,
            config_.per_scene_cap, Rng::derive(config_.seed, kBankStream)),
      shuffle_rng_(Rng::derive(config_.seed, kShuffleStream)),
      pool_rng_(Rng::derive(config_.seed, kPoolStream)) {}

bool Trainer::contrast_configured() const {
  return config_.alpha > 0.0 && !(config_.disable_ppc && config_.disable_pcc);
}

void Trainer::run() {
  std::vector<std::size_t> order(scenes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng_.uniform_index(i)]);
    for (std::size_t start = 0; start < order.size();
         start += config_.scenes_per_step) {
      const std::size_t count =
          std::min(config_.scenes_per_step, order.size() - start);
      run_step(std::span<const std::size_t>(order.data() + start, count));
    }
  }
}

StepTrace Trainer::run_step(std::span<const std::size_t> scene_indices) {
  if (scene_indices.empty())
    throw std::invalid_argument("run_step: empty scene batch");
  const auto step_start = Clock::now();

  struct Span {
    std::uint32_t scene_id;
    std::size_t offset;
    std::size_t count;
  };
  std::vector<Span> spans;
  std::size_t total = 0;
  for (std::size_t idx : scene_indices) {
    if (idx >= scenes_.size())
      throw std::invalid_argument("run_step: scene index out of range");
    spans.push_back({scenes_[idx].id, total, scenes_[idx].point_count()});
    total += scenes_[idx].point_count();
  }
  Matrix points(total, shape_.input_dim);
  std::vector<int> labels(total);
  {
    std::size_t at = 0;
    for (std::size_t idx : scene_indices) {
      const Scene& s = scenes_[idx];
      std::copy(s.points.data(), s.points.data() + s.points.size(),
                points.data() + at * shape_.input_dim);
      std::copy(s.labels.begin(), s.labels.end(), labels.begin() + at);
      at += s.point_count();
    }
  }

  ForwardResult fwd = forward(model_, points);

  const bool warm = step_ >= config_.warmup_steps;
  const bool do_cluster = contrast_configured() && warm;

  StepTrace trace;
  trace.step = step_;

  ClusterOutcome outcome;
  if (do_cluster) {
    const auto t0 = Clock::now();
    AssignSettings settings{config_.lambda, config_.sinkhorn_max_iters,
                            config_.sinkhorn_tolerance};
    try {
      outcome =
          assign_subclass_labels(fwd.embeddings, labels, centers_, settings);
    } catch (const SolverError& e) {
      throw SolverError("step " + std::to_string(step_) + ": " + e.what());
    }
    trace.clustering_ms += ms_since(t0);
  }

  const CeResult ce = ce_loss(fwd.logits, labels);

  PpcResult ppc;
  PccResult pcc;
  if (do_cluster && !config_.disable_ppc) {
    // pool = batch plus everything banked so far, capped by uniform subsample
    Matrix pool = fwd.embeddings;
    std::vector<int> pool_subclass = outcome.subclass_labels;
    std::vector<int> self_index(total);
    for (std::size_t i = 0; i < total; ++i) self_index[i] = static_cast<int>(i);
    if (!config_.disable_bank) {
      std::size_t extra = 0;
      std::vector<Matrix> gathered(bank_.subclass_count());
      for (std::size_t g = 0; g < bank_.subclass_count(); ++g) {
        gathered[g] = bank_.gather(g);
        extra += gathered[g].rows();
      }
      if (extra > 0) {
        Matrix merged(total + extra, config_.embed_dim);
        std::copy(pool.data(), pool.data() + pool.size(), merged.data());
        pool_subclass.reserve(total + extra);
        std::size_t at = total;
        for (std::size_t g = 0; g < bank_.subclass_count(); ++g) {
          const Matrix& rows = gathered[g];
          std::copy(rows.data(), rows.data() + rows.size(),
                    merged.data() + at * config_.embed_dim);
          pool_subclass.insert(pool_subclass.end(), rows.rows(),
                               static_cast<int>(g));
          at += rows.rows();
        }
        pool = std::move(merged);
      }
    }
    if (config_.negative_pool_cap > 0 &&
        pool.rows() > config_.negative_pool_cap) {
      const auto keep = sample_without_replacement(
          pool.rows(), config_.negative_pool_cap, pool_rng_);
      std::vector<int> new_pos(pool.rows(), -1);
      Matrix capped(keep.size(), config_.embed_dim);
      std::vector<int> capped_subclass(keep.size());
      for (std::size_t k = 0; k < keep.size(); ++k) {
        new_pos[keep[k]] = static_cast<int>(k);
        const auto src = pool.row(keep[k]);
        std::copy(src.begin(), src.end(), capped.row(k).begin());
        capped_subclass[k] = pool_subclass[keep[k]];
      }
      for (std::size_t i = 0; i < total; ++i) self_index[i] = new_pos[i];
      pool = std::move(capped);
      pool_subclass = std::move(capped_subclass);
    }
    ppc = ppc_loss(fwd.embeddings, outcome.subclass_labels, pool, pool_subclass,
                   config_.tau, self_index, config_.ppc_mode());
  }
  if (do_cluster && !config_.disable_pcc)
    pcc = pcc_loss(fwd.embeddings, outcome.subclass_labels, centers_, config_.tau);

  const LossReport report = total_loss(ce, ppc, pcc, config_.alpha, config_.tau);

  const ModelGrads grads =
      backward(model_, fwd.cache, report.grad_embeddings, report.grad_logits);
  sgd_step(model_, grads, config_.learning_rate);

  if (do_cluster) {
    const auto t1 = Clock::now();
    if (!config_.disable_ppc && !config_.disable_bank) {
      for (const auto& span : spans) {
        std::vector<std::vector<std::size_t>> by_subclass(bank_.subclass_count());
        for (std::size_t i = span.offset; i < span.offset + span.count; ++i)
          by_subclass[outcome.subclass_labels[i]].push_back(i);
        for (std::size_t g = 0; g < by_subclass.size(); ++g) {
          if (by_subclass[g].empty()) continue;
          Matrix rows(by_subclass[g].size(), config_.embed_dim);
          for (std::size_t k = 0; k < by_subclass[g].size(); ++k) {
            const auto src = fwd.embeddings.row(by_subclass[g][k]);
            std::copy(src.begin(), src.end(), rows.row(k).begin());
          }
          bank_.push(span.scene_id, g, rows);
        }
      }
    }
    momentum_update(centers_, outcome, config_.mu);
    trace.clustering_ms += ms_since(t1);
  }

  trace.ce = report.ce;
  trace.ppc = report.ppc;
  trace.pcc = report.pcc;
  trace.total = report.total;
  trace.alpha = report.alpha;
  trace.tau = report.tau;
  trace.skipped_anchors = report.skipped_anchors;
  trace.occupancy.assign(shape_.class_count,
                         std::vector<std::size_t>(config_.clusters_per_class, 0));
  if (do_cluster)
    for (int g : outcome.subclass_labels)
      ++trace.occupancy[g / config_.clusters_per_class]
                       [g % config_.clusters_per_class];
  trace.step_ms = ms_since(step_start);

  ++step_;
  traces_.push_back(trace);
  return trace;
}

void Trainer::save_outputs(const std::string& out_dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
  const fs::path base(out_dir);

  save_checkpoint(model_, (base / "checkpoint.tmdl").string(),
                  config_hash(config_));
  save_center_bank(centers_, (base / "center_bank.cbnk").string(), config_.seed,
                   step_);
  bank_.save((base / "memory_bank.mbnk").string());

  auto trace = open_text((base / "trace.jsonl").string());
  for (const auto& t : traces_) trace << trace_json_line(t) << "\n";
  if (!trace) throw IoError("failed writing trace.jsonl");

  auto timings = open_text((base / "timings.jsonl").string());
  for (const auto& t : traces_) timings << timing_json_line(t) << "\n";
  if (!timings) throw IoError("failed writing timings.jsonl");
}

MetricsReport evaluate(const Model& model, const std::vector<Scene>& scenes) {
  const SceneShape shape = scene_shape(scenes);
  if (shape.input_dim != model.input_dim())
    throw std::invalid_argument("evaluate: scenes have " +
                                std::to_string(shape.input_dim) +
                                " channels per point, model expects " +
                                std::to_string(model.input_dim()));
  if (shape.class_count != model.class_count())
    throw std::invalid_argument("evaluate: scenes declare " +
                                std::to_string(shape.class_count) +
                                " classes, model has " +
                                std::to_string(model.class_count()));
  std::vector<int> pred, truth;
  for (const auto& scene : scenes) {
    const ForwardResult fwd = forward(model, scene.points);
    for (std::size_t i = 0; i < scene.point_count(); ++i) {
      const auto row = fwd.logits.row(i);
      std::size_t best = 0;
      for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = c;
      pred.push_back(static_cast<int>(best));
      truth.push_back(scene.labels[i]);
    }
  }
  MetricsReport report;
  const IouReport iou = miou(pred, truth, shape.class_count);
  report.miou = iou.miou;
  report.per_class_iou = iou.per_class_iou;
  report.macc = macc(pred, truth, shape.class_count);
  report.point_count = pred.size();
  return report;
}

void write_cluster_report(const Model& model, const CenterBank& centers,
                          const std::vector<Scene>& scenes,
                          const AssignSettings& settings,
                          const std::string& out_csv) {
  const SceneShape shape = scene_shape(scenes);
  if (shape.input_dim != model.input_dim())
    throw std::invalid_argument("cluster report: scene channels do not match "
                                "the checkpoint");
  if (model.embed_dim() != centers.dim)
    throw std::invalid_argument("cluster report: checkpoint embedding dim " +
                                std::to_string(model.embed_dim()) +
                                " != center bank dim " +
                                std::to_string(centers.dim));
  if (shape.class_count != centers.class_count)
    throw std::invalid_argument("cluster report: scenes declare " +
                                std::to_string(shape.class_count) +
                                " classes, center bank has " +
                                std::to_string(centers.class_count));

  std::string body = "scene_id,point_index,class,subclass,similarity\n";
  std::vector<std::size_t> occupancy(centers.subclass_count(), 0);
  const std::size_t M = centers.clusters_per_class;
  for (const auto& scene : scenes) {
    const ForwardResult fwd = forward(model, scene.points);
    const ClusterOutcome outcome = assign_subclass_labels(
        fwd.embeddings, scene.labels, centers, settings);
    for (std::size_t i = 0; i < scene.point_count(); ++i) {
      const int g = outcome.subclass_labels[i];
      ++occupancy[g];
      const auto emb = fwd.embeddings.row(i);
      const auto center = centers.center(g);
      double sim = 0.0;
      for (std::size_t d = 0; d < emb.size(); ++d) sim += emb[d] * center[d];
      body += std::to_string(scene.id);
      body += ',';
      body += std::to_string(i);
      body += ',';
      body += std::to_string(scene.labels[i]);
      body += ',';
      body += std::to_string(g % M);
      body += ',';
      format_double(body, sim);
      body += '\n';
    }
  }
  auto os = open_text(out_csv);
  os << body;
  if (!os) throw IoError("failed writing " + out_csv);

  auto occ = open_text(out_csv + ".occupancy.csv");
  occ << "class,cluster,count\n";
  for (std::size_t g = 0; g < occupancy.size(); ++g)
    occ << g / M << ',' << g % M << ',' << occupancy[g] << "\n";
  if (!occ) throw IoError("failed writing " + out_csv + ".occupancy.csv");
}

void write_embedding_projection(const Model& model,
                                const std::vector<Scene>& scenes,
                                std::uint64_t seed, const std::string& out_csv) {
  const SceneShape shape = scene_shape(scenes);
  if (shape.input_dim != model.input_dim())
    throw std::invalid_argument("export: scene channels do not match the "
                                "checkpoint");
  std::size_t total = 0;
  for (const auto& s : scenes) total += s.point_count();
  Matrix all(total, model.embed_dim());
  std::vector<int> cls(total), planted(total, -1);
  std::size_t at = 0;
  for (const auto& scene : scenes) {
    const ForwardResult fwd = forward(model, scene.points);
    std::copy(fwd.embeddings.data(), fwd.embeddings.data() + fwd.embeddings.size(),
              all.data() + at * model.embed_dim());
    for (std::size_t i = 0; i < scene.point_count(); ++i) {
      cls[at + i] = scene.labels[i];
      if (scene.has_planted()) planted[at + i] = scene.planted_subclass[i];
    }
    at += scene.point_count();
  }
  const Projection2d proj = project_2d(all, seed);
  std::string body = "class,subclass,proj_x,proj_y\n";
  for (std::size_t i = 0; i < total; ++i) {
    body += std::to_string(cls[i]);
    body += ',';
    body += std::to_string(planted[i]);
    body += ',';
    format_double(body, proj.coords(i, 0));
    body += ',';
    format_double(body, proj.coords(i, 1));
    body += '\n';
  }
  auto os = open_text(out_csv);
  os << body;
  if (!os) throw IoError("failed writing " + out_csv);
}

}  // namespace otseg
