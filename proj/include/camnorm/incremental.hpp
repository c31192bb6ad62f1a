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

#ifndef CAMNORM_INCREMENTAL_HPP_
#define CAMNORM_INCREMENTAL_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camnorm/adaptation.hpp"
#include "camnorm/dataset.hpp"
#include "camnorm/evaluation.hpp"
#include "camnorm/model.hpp"
#include "camnorm/rng.hpp"
#include "camnorm/sampler.hpp"
#include "camnorm/trainer.hpp"
#include "json.hpp"

namespace camnorm {

// kDataFree drops old data and old heads after each stage; kReplay keeps an
// exemplar memory and the head of every finished set.
enum class IncrementalMode { kDataFree, kReplay };

std::string_view to_string(IncrementalMode mode);
// Accepts "data-free" and "replay".
IncrementalMode parse_incremental_mode(std::string_view text);

struct IncrementalOptions {
  IncrementalMode mode = IncrementalMode::kReplay;
  bool warmup = true;
  EstimationOptions estimation;
};

struct StageResult {
  std::size_t stage = 0;
  std::string dataset;
  // Metrics on the first set of the sequence after this stage.
  EvalReport report;
  double retention_rank1 = 1.0;
  double retention_map = 1.0;
  std::size_t warmup_iterations = 0;
  bool warmup_converged = false;
  std::size_t memory_size = 0;
  RunLog log;
};

struct IncrementalReport {
  std::vector<std::string> sequence;
  IncrementalMode mode = IncrementalMode::kReplay;
  bool warmup = true;
  std::vector<StageResult> stages;
  std::vector<ExemplarMemory> memories;

  double final_retention_rank1() const;
  double final_retention_map() const;
  // {sequence, mode, warmup, stages:[{stage, dataset, rank1, mAP,
  //  retention_rank1, retention_map, warmup_iterations, ...}]}
  nlohmann::json to_json() const;
};

// Statistics used to evaluate a model on a set it may no longer be trained
// on: per-camera estimates when any Norm layer is CBN, BN running statistics
// otherwise.
Adaptation default_adaptation(const Model& model);

// Trains `model` on each set in turn. Before every stage after the first a
// head for the new set is added and, when enabled, warmed up. After each
// stage the model is evaluated on the first set; retention is the ratio to
// the first stage's Rank-1 and mAP.
IncrementalReport run_incremental(Model& model, std::span<const Dataset> sequence,
                                  const TrainConfig& cfg, const IncrementalOptions& options,
                                  RngStream& rng);

}  // namespace camnorm

#endif  // CAMNORM_INCREMENTAL_HPP_
