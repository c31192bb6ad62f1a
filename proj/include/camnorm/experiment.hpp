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

#ifndef CAMNORM_EXPERIMENT_HPP_
#define CAMNORM_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "camnorm/adaptation.hpp"
#include "camnorm/dataset.hpp"
#include "camnorm/incremental.hpp"
#include "camnorm/model.hpp"
#include "camnorm/synthetic.hpp"
#include "camnorm/trainer.hpp"
#include "json.hpp"

namespace camnorm {

// Where a run's data comes from: a saved dataset directory, a named preset,
// or an inline generator config (checked in that order).
struct DataSource {
  std::string path;
  std::string preset;
  std::optional<SynthConfig> synthetic;

  bool empty() const { return path.empty() && preset.empty() && !synthetic; }
  nlohmann::json to_json() const;
  static DataSource from_json(const nlohmann::json& j);
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  DataSource data;
  ArchConfig arch;
  TrainConfig train = TrainConfig::desk();
  EstimationOptions estimation;
  Adaptation adaptation = Adaptation::kCamera;
  std::vector<DataSource> sequence;
  IncrementalMode incremental_mode = IncrementalMode::kReplay;
  bool warmup = true;
  std::size_t sweep_repeats = 10;
  std::vector<std::size_t> sweep_n{1, 5, 10, 20, 50};
  std::string output_dir = "runs/default";

  // Top-level keys: seed, data, arch, train, estimation, eval, incremental,
  // sweep, output_dir. Unknown keys anywhere are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  // 16 hex digits of FNV-1a 64 over the compact canonical JSON.
  std::string hash() const;
};

std::string fnv1a64_hex(std::string_view bytes);

Dataset load_source(const DataSource& source, std::uint64_t seed);

struct TrainedModel {
  Model model;
  RunLog log;
};

// Builds the model from `arch`, adds the head for `ds` (per-camera under weak
// supervision, relabeling when needed) and trains. Everything derives from
// cfg.seed.
TrainedModel train_model(const Dataset& ds, const ArchConfig& arch, const TrainConfig& cfg);

struct IncrementalRun {
  std::vector<Dataset> datasets;
  Model model;
  IncrementalReport report;
};

// Loads cfg.sequence (two preset sets when empty), builds the model from
// cfg.arch and runs the sequence. Seeded from cfg.seed.
IncrementalRun run_incremental_experiment(ExperimentConfig cfg);

struct SweepRow {
  std::size_t n_batches = 0;
  double mean_map = 0.0;  // percent
  double var_map = 0.0;   // population variance, percent^2
  std::vector<double> maps;
};

// Repeats per-camera estimation + evaluation `repeats` times per batch count.
// Repeat r uses the same estimation seed for every batch count.
std::vector<SweepRow> sweep_nbatches(const Model& model, const Dataset& ds,
                                     std::span<const std::size_t> n_values,
                                     std::size_t repeats, const EstimationOptions& base,
                                     std::uint64_t seed);

std::string sweep_csv(std::span<const SweepRow> rows);

// Writes `text` to `path`, creating parent directories; IoError on failure.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace camnorm

#endif  // CAMNORM_EXPERIMENT_HPP_
