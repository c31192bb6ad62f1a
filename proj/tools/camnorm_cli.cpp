// Copyright 2026 The camnorm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// camnorm: generate synthetic camera data, train BN/CBN models, estimate
// test-time statistics, evaluate, and run incremental sequences.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "camnorm/adaptation.hpp"
#include "camnorm/checkpoint.hpp"
#include "camnorm/dataset.hpp"
#include "camnorm/error.hpp"
#include "camnorm/evaluation.hpp"
#include "camnorm/experiment.hpp"
#include "camnorm/incremental.hpp"
#include "camnorm/synthetic.hpp"
#include "camnorm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace camnorm {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitContract = 3;
constexpr int kExitIo = 4;

// Flags shared by every subcommand that reads an experiment config.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("-c,--config", f.config, "Experiment config (JSON)");
  app->add_option("--seed", f.seed, "Seed (overrides the config)");
  app->add_option("--data", f.data, "Dataset directory or preset name");
  app->add_option("-o,--out", f.out, "Output directory");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg =
      f.config.empty() ? ExperimentConfig::from_json(json::object())
                       : ExperimentConfig::from_file(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.train.seed = *f.seed;
  }
  if (!f.data.empty()) cfg.data = DataSource::from_json(json(f.data));
  if (!f.out.empty()) cfg.output_dir = f.out;
  return cfg;
}

std::vector<NormKind> parse_mask(const std::string& mask, std::size_t layers) {
  std::vector<NormKind> kinds;
  std::stringstream ss(mask);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "1") {
      kinds.push_back(NormKind::kCBN);
    } else if (item == "0") {
      kinds.push_back(NormKind::kBN);
    } else {
      throw ConfigError("--norm-mask entries must be 0 or 1, got '" + item + "'");
    }
  }
  if (kinds.size() != layers) {
    throw ConfigError("--norm-mask has " + std::to_string(kinds.size()) +
                      " entries for " + std::to_string(layers) + " norm layers");
  }
  return kinds;
}

json provenance(const ExperimentConfig& cfg) {
  return {{"config_hash", cfg.hash()}, {"seed", cfg.seed}};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void save_config(const ExperimentConfig& cfg) {
  json j = cfg.to_json();
  j["config_hash"] = cfg.hash();
  write_json(fs::path(cfg.output_dir) / "config.json", j);
}

int cmd_gen(const CommonFlags& f, const std::string& preset, bool force) {
  ExperimentConfig cfg = resolve(f);
  SynthConfig synth;
  if (!preset.empty()) {
    synth = synth_preset(preset, cfg.seed);
  } else if (cfg.data.synthetic) {
    synth = *cfg.data.synthetic;
  } else {
    synth = synth_preset(cfg.data.preset.empty() ? "default" : cfg.data.preset, cfg.seed);
  }
  const fs::path out(cfg.output_dir);
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw IoError(out.string() + " exists and is not empty (use --force)");
  }
  if (force) fs::remove_all(out);
  const Dataset ds = generate_synthetic(synth);
  save_dataset(ds, out);
  std::cout << "wrote " << ds.samples.size() << " samples (" << ds.cameras.size()
            << " cameras) to " << out.string() << "\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& f, const std::string& norm, const std::string& mask,
              const std::string& supervision, std::optional<std::size_t> epochs) {
  ExperimentConfig cfg = resolve(f);
  if (!norm.empty() && !mask.empty()) throw ConfigError("--norm and --norm-mask conflict");
  if (!norm.empty()) {
    cfg.arch.norm_kinds.assign(cfg.arch.widths.size(), parse_norm_kind(norm));
  }
  if (!mask.empty()) cfg.arch.norm_kinds = parse_mask(mask, cfg.arch.widths.size());
  if (!supervision.empty()) {
    cfg.train = TrainConfig::from_json(json{{"supervision", supervision}}, cfg.train);
  }
  if (epochs) {
    cfg.train.epochs = *epochs;
    cfg.train.decay_epoch = std::min(cfg.train.decay_epoch, *epochs ? *epochs - 1 : 0);
  }
  cfg.validate();
  const Dataset ds = load_source(cfg.data, cfg.seed);
  cfg.arch.input_dim = ds.dim;
  const TrainedModel trained = train_model(ds, cfg.arch, cfg.train);

  const fs::path out(cfg.output_dir);
  save_config(cfg);
  save_checkpoint(trained.model, {cfg.seed, cfg.train.epochs, cfg.hash()},
                  out / "model.ckpt");
  std::string log;
  for (const EpochRecord& r : trained.log.epochs) {
    json line = provenance(cfg);
    line.update({{"epoch", r.epoch},
                 {"lr", r.lr},
                 {"mean_loss", r.mean_loss},
                 {"wall_ms", r.wall_ms}});
    log += line.dump() + "\n";
  }
  write_text(out / "train_log.jsonl", log);
  for (const std::string& w : trained.log.warnings) std::cerr << "warning: " << w << "\n";
  const double final_loss =
      trained.log.epochs.empty() ? 0.0 : trained.log.epochs.back().mean_loss;
  std::cout << "trained " << cfg.train.epochs << " epochs, final loss " << final_loss
            << "; checkpoint " << (out / "model.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& adapt,
             std::optional<std::size_t> nbatches) {
  ExperimentConfig cfg = resolve(f);
  if (!adapt.empty()) cfg.adaptation = parse_adaptation(adapt);
  if (nbatches) cfg.estimation.n_batches = *nbatches;
  cfg.validate();
  const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const Dataset ds = load_source(cfg.data, cfg.seed);
  RngStream rng(cfg.seed);
  CameraStatsTable stats;
  const EvalReport report =
      evaluate_model(ckpt.model, ds, cfg.adaptation, cfg.estimation, rng, &stats);

  const fs::path out(cfg.output_dir);
  save_config(cfg);
  json j = report.to_json();
  j.update(provenance(cfg));
  j["adaptation"] = std::string(to_string(cfg.adaptation));
  j["n_batches"] = cfg.estimation.n_batches;
  j["checkpoint_config_hash"] = ckpt.meta.config_hash;
  write_json(out / "eval_report.json", j);
  write_text(out / "cmc.csv", report.cmc_csv());
  write_json(out / "stats.json", {{"provenance", provenance(cfg)}, {"entries", stats.to_json()}});
  std::printf("rank1 %.4f  rank5 %.4f  rank10 %.4f  mAP %.4f  (%zu queries, %zu dropped)\n",
              report.rank1, report.rank5, report.rank10, report.map, report.n_queries,
              report.n_dropped);
  return kExitOk;
}

int cmd_sweep(const CommonFlags& f, const std::string& checkpoint,
              std::optional<std::size_t> repeats) {
  ExperimentConfig cfg = resolve(f);
  if (repeats) cfg.sweep_repeats = *repeats;
  cfg.validate();
  const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const Dataset ds = load_source(cfg.data, cfg.seed);
  const std::vector<SweepRow> rows =
      sweep_nbatches(ckpt.model, ds, cfg.sweep_n, cfg.sweep_repeats, cfg.estimation, cfg.seed);
  const fs::path out(cfg.output_dir);
  save_config(cfg);
  const std::string csv = sweep_csv(rows);
  write_text(out / "sweep.csv", csv);
  write_json(out / "sweep_meta.json", provenance(cfg));
  std::cout << csv;
  return kExitOk;
}

int cmd_incremental(const CommonFlags& f, const std::string& sequence, const std::string& mode,
                    bool no_warmup, const std::string& norm) {
  ExperimentConfig cfg = resolve(f);
  if (!sequence.empty()) {
    cfg.sequence.clear();
    std::stringstream ss(sequence);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.sequence.push_back(DataSource::from_json(json(item)));
  }
  if (!mode.empty()) cfg.incremental_mode = parse_incremental_mode(mode);
  if (no_warmup) cfg.warmup = false;
  if (!norm.empty()) cfg.arch.norm_kinds.assign(cfg.arch.widths.size(), parse_norm_kind(norm));
  const IncrementalRun run = run_incremental_experiment(cfg);
  const IncrementalReport& report = run.report;

  const fs::path out(cfg.output_dir);
  save_config(cfg);
  json j = report.to_json();
  j.update(provenance(cfg));
  write_json(out / "incremental_report.json", j);
  for (const ExemplarMemory& m : report.memories) {
    Dataset mem;
    mem.name = "memory-" + m.source;
    mem.dim = run.datasets.front().dim;
    mem.samples = m.samples;
    for (const Sample& s : m.samples) {
      mem.cameras.insert(s.camera);
      mem.identities.insert(s.identity);
    }
    mem.generator_params = {{"source", m.source}, {"provenance", provenance(cfg)}};
    save_dataset(mem, out / mem.name);
  }
  for (const StageResult& s : report.stages) {
    for (const std::string& w : s.log.warnings) std::cerr << "warning: " << w << "\n";
    std::printf("stage %zu (%s): rank1 %.4f mAP %.4f retention rank1 %.4f mAP %.4f\n",
                s.stage, s.dataset.c_str(), s.report.rank1, s.report.map, s.retention_rank1,
                s.retention_map);
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case Error::Category::kConfig:
      return kExitConfig;
    case Error::Category::kContract:
      return kExitContract;
    case Error::Category::kIo:
      return kExitIo;
  }
  return kExitContract;
}

int run(int argc, char** argv) {
  CLI::App app{"camnorm: camera-conditioned normalization experiments on synthetic data"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, eval_f, sweep_f, inc_f;
  std::string preset;
  bool force = false;
  auto* gen = app.add_subcommand("gen", "Generate and save a synthetic dataset");
  add_common(gen, gen_f);
  gen->add_option("--preset", preset, "default | direct-transfer | incremental-a | incremental-b");
  gen->add_flag("--force", force, "Replace a non-empty output directory");

  std::string norm, mask, supervision;
  std::optional<std::size_t> epochs;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes checkpoint and log");
  add_common(train_cmd, train_f);
  train_cmd->add_option("--norm", norm, "bn | cbn for every norm layer");
  train_cmd->add_option("--norm-mask", mask, "Per-layer kinds, e.g. 1,0,0 (1 = cbn)");
  train_cmd->add_option("--supervision", supervision, "full | weak");
  train_cmd->add_option("--epochs", epochs, "Epoch count override");

  std::string checkpoint, adapt;
  std::optional<std::size_t> nbatches;
  auto* eval_cmd = app.add_subcommand("eval", "Estimate statistics and evaluate a checkpoint");
  add_common(eval_cmd, eval_f);
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--adapt", adapt, "cbn | adabn | none");
  eval_cmd->add_option("--nbatches", nbatches, "Estimation mini-batches per camera");

  std::string sweep_ckpt;
  std::optional<std::size_t> repeats;
  auto* sweep = app.add_subcommand("sweep-nbatches", "Estimation batch-count sweep");
  add_common(sweep, sweep_f);
  sweep->add_option("--checkpoint", sweep_ckpt, "CBN model checkpoint")->required();
  sweep->add_option("--repeats", repeats, "Estimation repeats per batch count");

  std::string sequence, mode, inc_norm;
  bool no_warmup = false;
  auto* inc = app.add_subcommand("incremental", "Train over a dataset sequence");
  add_common(inc, inc_f);
  inc->add_option("--sequence", sequence, "Comma-separated dataset dirs or presets");
  inc->add_option("--mode", mode, "data-free | replay");
  inc->add_flag("--no-warmup", no_warmup, "Skip classifier warm-up");
  inc->add_option("--norm", inc_norm, "bn | cbn for every norm layer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen(gen_f, preset, force);
    if (*train_cmd) return cmd_train(train_f, norm, mask, supervision, epochs);
    if (*eval_cmd) return cmd_eval(eval_f, checkpoint, adapt, nbatches);
    if (*sweep) return cmd_sweep(sweep_f, sweep_ckpt, repeats);
    if (*inc) return cmd_incremental(inc_f, sequence, mode, no_warmup, inc_norm);
  } catch (const Error& e) {
    std::cerr << "camnorm: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "camnorm: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace camnorm

int main(int argc, char** argv) { return camnorm::run(argc, argv); }
