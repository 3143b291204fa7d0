#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "otseg/cluster.hpp"
#include "otseg/config.hpp"
#include "otseg/errors.hpp"
#include "otseg/model.hpp"
#include "otseg/scene.hpp"
#include "otseg/synth.hpp"
#include "otseg/trainer.hpp"

namespace {

using namespace otseg;

void cmd_synth(const std::string& spec_path, const std::string& out_dir) {
  const SynthSpec spec = load_synth_spec(spec_path);
  const std::vector<Scene> scenes = generate(spec);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
  for (const auto& scene : scenes) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%04u.txt", scene.id);
    write_scene(scene, (fs::path(out_dir) / name).string());
  }
  std::cout << "wrote " << scenes.size() << " scenes ("
            << scenes.front().point_count() << " points each) to " << out_dir
            << "\n";
}

void cmd_train(const std::string& config_path, const std::string& scene_dir,
               const std::string& out_dir, long warmup_override) {
  TrainConfig config = load_train_config(config_path);
  if (warmup_override >= 0) {
    config.warmup_steps = static_cast<std::size_t>(warmup_override);
    validate(config);
  }
  std::vector<Scene> scenes = load_scene_dir(scene_dir);
  Trainer trainer(std::move(config), std::move(scenes));
  trainer.run();
  trainer.save_outputs(out_dir);
  const StepTrace& last = trainer.traces().back();
  std::cout << "trained " << trainer.config().epochs << " epochs, "
            << trainer.steps_done() << " steps; final total loss " << last.total
            << "; outputs in " << out_dir << "\n";
}

void cmd_eval(const std::string& checkpoint_path, const std::string& scene_dir,
              const std::string& out_path) {
  const CheckpointFile ck = load_checkpoint(checkpoint_path);
  const std::vector<Scene> scenes = load_scene_dir(scene_dir);
  const MetricsReport report = evaluate(ck.model, scenes);
  const std::string json = metrics_json(report);
  std::cout << json << "\n";
  if (!out_path.empty()) {
    std::ofstream os(out_path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + out_path + " for writing");
    os << json << "\n";
    if (!os) throw IoError("failed writing " + out_path);
  }
}

void cmd_cluster_report(const std::string& checkpoint_path,
                        const std::string& bank_path,
                        const std::string& scene_dir, const std::string& out_csv,
                        const AssignSettings& settings) {
  const CheckpointFile ck = load_checkpoint(checkpoint_path);
  const CenterBankFile bank = load_center_bank(bank_path);
  const std::vector<Scene> scenes = load_scene_dir(scene_dir);
  write_cluster_report(ck.model, bank.bank, scenes, settings, out_csv);
  std::cout << "wrote " << out_csv << " and " << out_csv << ".occupancy.csv\n";
}

void cmd_export(const std::string& checkpoint_path, const std::string& scene_dir,
                const std::string& out_csv, int dims, std::uint64_t seed) {
  if (dims != 2)
    throw std::invalid_argument("export-embeddings: only --dims 2 is supported");
  const CheckpointFile ck = load_checkpoint(checkpoint_path);
  const std::vector<Scene> scenes = load_scene_dir(scene_dir);
  write_embedding_projection(ck.model, scenes, seed, out_csv);
  std::cout << "wrote " << out_csv << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud training scheme with within-class clustering and "
               "contrastive objectives"};
  app.require_subcommand(1);

  std::string config_path, scene_dir, out_path, checkpoint_path, bank_path,
      spec_path;
  long warmup_override = -1;
  AssignSettings settings;
  int dims = 2;
  std::uint64_t proj_seed = 0;

  auto* synth = app.add_subcommand("synth", "generate synthetic scenes");
  synth->add_option("--spec", spec_path, "synth spec (TOML)")->required();
  synth->add_option("--out", out_path, "output directory")->required();
  synth->callback([&] { cmd_synth(spec_path, out_path); });

  auto* train = app.add_subcommand("train", "train on a scene directory");
  train->add_option("--config", config_path, "training config (TOML)")->required();
  train->add_option("--scenes", scene_dir, "scene directory or file")->required();
  train->add_option("--out", out_path, "output directory")->required();
  train->add_option("--warmup-steps", warmup_override,
                    "override warmup_steps from the config");
  train->callback(
      [&] { cmd_train(config_path, scene_dir, out_path, warmup_override); });

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  eval->add_option("--scenes", scene_dir, "scene directory or file")->required();
  eval->add_option("--out", out_path, "also write the metrics JSON here");
  eval->callback([&] { cmd_eval(checkpoint_path, scene_dir, out_path); });

  auto* report = app.add_subcommand("cluster-report",
                                    "dump per-point subclass assignments");
  report->add_option("--checkpoint", checkpoint_path, "model checkpoint")
      ->required();
  report->add_option("--bank", bank_path, "center bank snapshot")->required();
  report->add_option("--scenes", scene_dir, "scene directory or file")->required();
  report->add_option("--out", out_path, "output CSV")->required();
  report->add_option("--lambda", settings.lambda, "transport sharpness");
  report->add_option("--max-iters", settings.max_iters, "solver iteration cap");
  report->add_option("--tolerance", settings.tolerance, "solver tolerance");
  report->callback([&] {
    cmd_cluster_report(checkpoint_path, bank_path, scene_dir, out_path, settings);
  });

  auto* exp = app.add_subcommand("export-embeddings",
                                 "project embeddings to 2-D for plotting");
  exp->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
  exp->add_option("--scenes", scene_dir, "scene directory or file")->required();
  exp->add_option("--out", out_path, "output CSV")->required();
  exp->add_option("--dims", dims, "projection dimensions (2)");
  exp->add_option("--seed", proj_seed, "projection seed");
  exp->callback(
      [&] { cmd_export(checkpoint_path, scene_dir, out_path, dims, proj_seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIoFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
