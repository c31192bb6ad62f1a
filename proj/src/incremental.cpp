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

#include "camnorm/incremental.hpp"

#include <string>

#include "camnorm/error.hpp"

namespace camnorm {
namespace {

double ratio(double value, double reference) {
  return reference > 0.0 ? value / reference : 0.0;
}

}  // namespace

std::string_view to_string(IncrementalMode mode) {
  return mode == IncrementalMode::kDataFree ? "data-free" : "replay";
}

IncrementalMode parse_incremental_mode(std::string_view text) {
  if (text == "data-free") return IncrementalMode::kDataFree;
  if (text == "replay") return IncrementalMode::kReplay;
  throw ConfigError("unknown incremental mode '" + std::string(text) +
                    "' (expected data-free or replay)");
}

double IncrementalReport::final_retention_rank1() const {
  return stages.empty() ? 1.0 : stages.back().retention_rank1;
}

double IncrementalReport::final_retention_map() const {
  return stages.empty() ? 1.0 : stages.back().retention_map;
}

nlohmann::json IncrementalReport::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const StageResult& s : stages) {
    st.push_back({{"stage", s.stage},
                  {"dataset", s.dataset},
                  {"rank1", s.report.rank1},
                  {"mAP", s.report.map},
                  {"retention_rank1", s.retention_rank1},
                  {"retention_map", s.retention_map},
                  {"warmup_iterations", s.warmup_iterations},
                  {"warmup_converged", s.warmup_converged},
                  {"memory_size", s.memory_size}});
  }
  return {{"sequence", sequence},
          {"mode", to_string(mode)},
          {"warmup", warmup},
          {"stages", st},
          {"retention", {{"rank1", final_retention_rank1()}, {"mAP", final_retention_map()}}}};
}

Adaptation default_adaptation(const Model& model) {
  for (std::size_t i = 0; i < model.num_norm_layers(); ++i) {
    if (model.norm(i).kind == NormKind::kCBN) return Adaptation::kCamera;
  }
  return Adaptation::kNone;
}

IncrementalReport run_incremental(Model& model, std::span<const Dataset> sequence,
                                  const TrainConfig& cfg, const IncrementalOptions& options,
                                  RngStream& rng) {
  if (sequence.empty()) throw ConfigError("incremental sequence is empty");
  cfg.validate();
  options.estimation.validate();
  IncrementalReport report;
  report.mode = options.mode;
  report.warmup = options.warmup;
  for (const Dataset& ds : sequence) report.sequence.push_back(ds.name);
  const bool weak = cfg.supervision == Supervision::kWeak;
  const Dataset& first = sequence.front();

  for (std::size_t stage = 0; stage < sequence.size(); ++stage) {
    const Dataset& ds = sequence[stage];
    RngStream stage_rng = rng.derive(stage);
    StageResult result;
    result.stage = stage;
    result.dataset = ds.name;

    if (options.mode == IncrementalMode::kDataFree) {
      std::vector<std::string> stale;
      for (const Head& h : model.heads()) {
        if (h.source != ds.name) stale.push_back(h.source);
      }
      for (const std::string& s : stale) model.remove_head(s);
    }
    if (!model.find_head(ds.name)) add_head_for(model, ds, weak, stage_rng);
    if (stage > 0 && options.warmup) {
      const WarmupResult w = warmup_classifier(model, ds, cfg, stage_rng);
      result.warmup_iterations = w.iterations;
      result.warmup_converged = w.converged;
      if (!w.converged) {
        result.log.warnings.push_back("warm-up for " + ds.name + " stopped at the cap of " +
                                      std::to_string(w.iterations) + " iterations");
      }
    }

    const std::span<const ExemplarMemory> memories =
        options.mode == IncrementalMode::kReplay ? std::span<const ExemplarMemory>(report.memories)
                                                 : std::span<const ExemplarMemory>();
    RunLog log = train(model, ds, cfg, stage_rng, memories);
    log.warnings.insert(log.warnings.begin(), result.log.warnings.begin(),
                        result.log.warnings.end());
    result.log = std::move(log);

    if (options.mode == IncrementalMode::kReplay && stage + 1 < sequence.size()) {
      report.memories.push_back(build_exemplar_memory(ds, stage_rng));
      result.memory_size = report.memories.back().samples.size();
    }

    // Same estimation draw at every stage.
    RngStream eval_rng = rng.derive(0x6576616c00000000ULL);
    result.report = evaluate_model(model, first, default_adaptation(model), options.estimation,
                                   eval_rng);
    if (stage == 0) {
      result.retention_rank1 = 1.0;
      result.retention_map = 1.0;
    } else {
      const EvalReport& base = report.stages.front().report;
      result.retention_rank1 = ratio(result.report.rank1, base.rank1);
      result.retention_map = ratio(result.report.map, base.map);
    }
    report.stages.push_back(std::move(result));
  }
  return report;
}

}  // namespace camnorm
