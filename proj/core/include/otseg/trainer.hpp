#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "otseg/cluster.hpp"
#include "otseg/config.hpp"
#include "otseg/losses.hpp"
#include "otseg/memory_bank.hpp"
#include "otseg/metrics.hpp"
#include "otseg/model.hpp"
#include "otseg/scene.hpp"

namespace otseg {

// One record per optimization step. Wall-clock fields are kept out of the
// trace line on purpose: trace logs must be bitwise reproducible across runs,
// so timings go to a separate sidecar.
struct StepTrace {
  std::size_t step = 0;
  double ce = 0.0;
  double ppc = 0.0;
  double pcc = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  std::size_t skipped_anchors = 0;
  std::vector<std::vector<std::size_t>> occupancy;  // class -> per-cluster counts
  double clustering_ms = 0.0;
  double step_ms = 0.0;
};

// Deterministic JSON line, schema version v:1. Excludes the timing fields.
std::string trace_json_line(const StepTrace& trace);

// Timing sidecar line for the same step.
std::string timing_json_line(const StepTrace& trace);

struct MetricsReport {
  double miou = 0.0;
  double macc = 0.0;
  std::vector<double> per_class_iou;  // -1 where the class is absent entirely
  std::size_t point_count = 0;
};

std::string metrics_json(const MetricsReport& report);

// Consistent class count / input dim across scenes, or ConfigError.
struct SceneShape {
  std::size_t class_count = 0;
  std::size_t input_dim = 0;
};
SceneShape scene_shape(const std::vector<Scene>& scenes);

// Alternating two-phase training: per step, forward the batch, assign
// subclass labels by balanced transport against the current centers, compute
// losses against the center bank and the memory bank as they stood at the end
// of the previous step, apply SGD, then push this step's features and move the
// centers. Deterministic end to end for a fixed config+seed.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<Scene> scenes);

  // All epochs, scene order reshuffled per epoch.
  void run();

  // One step on an explicit batch of scene indices (exposed for tests and
  // benchmarks; run() drives this).
  StepTrace run_step(std::span<const std::size_t> scene_indices);

  const TrainConfig& config() const { return config_; }
  const Model& model() const { return model_; }
  const CenterBank& centers() const { return centers_; }
  const MemoryBank& bank() const { return bank_; }
  const std::vector<StepTrace>& traces() const { return traces_; }
  std::size_t class_count() const { return shape_.class_count; }
  std::size_t steps_done() const { return step_; }

  // checkpoint.tmdl, center_bank.cbnk, memory_bank.mbnk, trace.jsonl,
  // timings.jsonl under out_dir (created if missing).
  void save_outputs(const std::string& out_dir) const;

 private:
  static TrainConfig checked(TrainConfig config);
  bool contrast_configured() const;

  TrainConfig config_;
  std::vector<Scene> scenes_;
  SceneShape shape_;
  Model model_;
  CenterBank centers_;
  MemoryBank bank_;
  Rng shuffle_rng_;
  Rng pool_rng_;
  std::size_t step_ = 0;
  std::vector<StepTrace> traces_;
};

// Inference needs only the model: argmax of logits per point, metrics against
// the scene labels. No center bank or memory bank is touched.
MetricsReport evaluate(const Model& model, const std::vector<Scene>& scenes);

// Per-point assignment dump against a saved center bank: CSV rows
// (scene_id, point_index, class, subclass, similarity) plus an occupancy CSV
// (class, cluster, count) at <out_csv>.occupancy.csv.
void write_cluster_report(const Model& model, const CenterBank& centers,
                          const std::vector<Scene>& scenes,
                          const AssignSettings& settings,
                          const std::string& out_csv);

// 2-D principal-component projection of all embeddings: CSV rows
// (class, subclass, proj_x, proj_y); subclass is the planted id or -1.
void write_embedding_projection(const Model& model,
                                const std::vector<Scene>& scenes,
                                std::uint64_t seed, const std::string& out_csv);

}  // namespace otseg
