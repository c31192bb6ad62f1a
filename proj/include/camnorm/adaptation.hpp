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

#ifndef CAMNORM_ADAPTATION_HPP_
#define CAMNORM_ADAPTATION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camnorm/dataset.hpp"
#include "camnorm/model.hpp"
#include "camnorm/rng.hpp"
#include "json.hpp"

namespace camnorm {

// Which statistics feed the Norm layers at inference.
//   kNone    : BN running statistics only (CBN layers cannot run)
//   kCamera  : per-camera estimates
//   kDataset : one estimate pooled over all target cameras (AdaBN)
enum class Adaptation { kNone, kCamera, kDataset };

std::string_view to_string(Adaptation a);
// Accepts "none", "cbn", "adabn".
Adaptation parse_adaptation(std::string_view text);

struct StatsEntry {
  std::vector<double> mean;
  std::vector<double> var;
  std::size_t n_samples = 0;

  friend bool operator==(const StatsEntry&, const StatsEntry&) = default;
};

struct CameraStatsTable {
  // (norm layer ordinal, camera) -> statistics
  std::map<std::pair<std::size_t, int>, StatsEntry> entries;
  std::size_t n_batches = 0;
  std::uint64_t seed = 0;

  const StatsEntry* find(std::size_t layer, int camera) const;
  // Array of {layer, camera, mean, var, n_samples, N, seed}.
  nlohmann::json to_json() const;

  friend bool operator==(const CameraStatsTable&, const CameraStatsTable&) = default;
};

struct EstimationOptions {
  std::size_t n_batches = 10;
  std::size_t batch_size = 64;
  std::vector<Split> splits{Split::kQuery, Split::kGallery};

  void validate() const;
};

// Test-time statistics per camera: shuffle the camera's images, take up to
// n_batches * batch_size of them (all of them when fewer exist, never
// duplicated), forward them batch by batch with batch statistics at every
// Norm layer, and record the pooled mean and population variance of each
// layer's input over all forwarded images. A trailing batch of one image is
// folded into the previous batch. Labels are never read.
CameraStatsTable estimate_camera_stats(const Model& model, const Dataset& ds,
                                       std::span<const int> cameras,
                                       const EstimationOptions& options, RngStream& rng);

// Same procedure with all cameras pooled into one group; the single result
// is copied to every camera present in the selected splits.
CameraStatsTable estimate_adabn_stats(const Model& model, const Dataset& ds,
                                      const EstimationOptions& options, RngStream& rng);

// A model paired with injected statistics. CBN layers read the entry for the
// image's camera; BN layers read the entry when present and their running
// statistics otherwise.
class InferenceModel {
 public:
  explicit InferenceModel(const Model& model) : model_(&model) {}

  // Merges `table` into the current statistics; existing entries are
  // overwritten.
  void inject(const CameraStatsTable& table);
  const CameraStatsTable& stats() const { return stats_; }
  const Model& model() const { return *model_; }

  // Throws StatsMissingError when a CBN layer lacks an entry for a camera.
  void check_coverage(std::span<const int> cameras) const;

  // Rows of `x` all come from `camera`; output is the bottleneck feature.
  Tensor forward(const Tensor& x, int camera) const;

 private:
  const Model* model_;
  CameraStatsTable stats_;
};

InferenceModel inject_stats(const Model& model, const CameraStatsTable& table,
                            std::span<const int> cameras);

Tensor forward_eval(const Model& model, const Tensor& x, int camera,
                    const CameraStatsTable& table);

}  // namespace camnorm

#endif  // CAMNORM_ADAPTATION_HPP_
