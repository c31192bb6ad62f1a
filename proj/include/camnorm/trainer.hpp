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

#ifndef CAMNORM_TRAINER_HPP_
#define CAMNORM_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "camnorm/dataset.hpp"
#include "camnorm/model.hpp"
#include "camnorm/rng.hpp"
#include "camnorm/sampler.hpp"
#include "json.hpp"

namespace camnorm {

enum class Supervision { kFull, kWeak };

struct TrainConfig {
  double lr0 = 0.01;
  std::size_t decay_epoch = 40;
  double decay_factor = 10.0;
  std::size_t epochs = 60;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t p = 16;
  std::size_t k = 4;
  std::uint64_t seed = 1;
  Supervision supervision = Supervision::kFull;
  // 0 means ceil(train samples / (p * k)).
  std::size_t batches_per_epoch = 0;
  ReplayOptions replay;
  std::size_t warmup_window = 50;
  double warmup_tolerance = 0.1;
  std::size_t warmup_patience = 5;
  // 0 means 10 * warmup_window.
  std::size_t warmup_cap = 0;

  // Reference schedule: 60 epochs, decay by 10 after epoch 40.
  static TrainConfig reference();
  // Shortened schedule for the synthetic benchmark: 20 epochs, decay at 14.
  static TrainConfig desk();

  void validate() const;
  nlohmann::json to_json() const;
  // Overlays the keys present in `j` onto `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base = desk());
};

// Step schedule: lr0 before decay_epoch, lr0 / decay_factor from then on.
double lr_at(std::size_t epoch, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double wall_ms = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;

  // One JSON object per epoch: {epoch, lr, mean_loss, wall_ms}.
  std::string to_jsonl() const;
};

struct StepOutput {
  double loss = 0.0;
  GradientMap grads;
  std::size_t batch_size = 0;
};

// Forward + loss + backward for one batch. Each sample is scored by the head
// of its source set (current dataset or memory) and, for per-camera heads,
// by its camera's classifier; the loss is the mean over samples, i.e. the
// sample-weighted mean of per-classifier cross-entropies. Only the head named
// `only_head` receives gradients when it is nonempty, and the backbone then
// gets none.
StepOutput compute_step(Model& model, const Dataset& current,
                        std::span<const ExemplarMemory> memories,
                        const MiniBatch& batch, bool update_running,
                        const std::string& only_head = {});

// Epoch loop over P x K batches (mixed with exemplar groups when memories
// are given). The head for `ds` must already exist.
RunLog train(Model& model, const Dataset& ds, const TrainConfig& cfg, RngStream& rng,
             std::span<const ExemplarMemory> memories = {});

// Convergence test of the classifier warm-up: keep the last `window` losses;
// once the window is full, a loss within `tolerance` of the window mean
// increments a counter, anything else resets it; done at `patience`.
class WarmupMonitor {
 public:
  WarmupMonitor(std::size_t window = 50, double tolerance = 0.1,
                std::size_t patience = 5);

  // Returns true once the stopping condition holds.
  bool push(double loss);
  std::size_t iterations() const { return iterations_; }
  std::size_t counter() const { return counter_; }
  const std::deque<double>& window() const { return losses_; }

 private:
  std::size_t window_;
  double tolerance_;
  std::size_t patience_;
  std::deque<double> losses_;
  double sum_ = 0.0;
  std::size_t counter_ = 0;
  std::size_t iterations_ = 0;
};

struct WarmupResult {
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> losses;
};

// Fits only the head of `ds` on batches from `ds` with the backbone frozen
// (parameters and running statistics untouched). Stops when the monitor
// fires or after the iteration cap, which is reported as not converged.
WarmupResult warmup_classifier(Model& model, const Dataset& ds, const TrainConfig& cfg,
                               RngStream& rng);

}  // namespace camnorm

#endif  // CAMNORM_TRAINER_HPP_
