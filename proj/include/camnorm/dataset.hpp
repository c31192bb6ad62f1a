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

#ifndef CAMNORM_DATASET_HPP_
#define CAMNORM_DATASET_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "camnorm/tensor.hpp"
#include "json.hpp"

namespace camnorm {

enum class Split { kTrain, kQuery, kGallery };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct Sample {
  std::vector<double> features;
  int identity = 0;
  int camera = 0;
  // Per-camera label; set only on train samples of weakly supervised sets.
  std::optional<int> intra_label;
  Split split = Split::kTrain;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::string name;
  std::size_t dim = 0;
  std::vector<Sample> samples;
  std::set<int> cameras;
  std::set<int> identities;
  // Free-form generator log written to meta.json; null when absent.
  nlohmann::json generator_params;

  std::vector<std::size_t> indices(Split split) const;
  std::vector<std::size_t> indices(std::span<const Split> splits) const;
  // Sorted identities that occur in `split`.
  std::vector<int> identities_in(Split split) const;
  std::set<int> cameras_in(Split split) const;
  bool has_intra_labels() const;

  // Throws DataIntegrityError on a violated invariant.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Stacks the feature vectors of the selected samples into [n, dim].
Tensor feature_matrix(const Dataset& ds, std::span<const std::size_t> indices);
std::vector<int> camera_column(const Dataset& ds,
                               std::span<const std::size_t> indices);

// Writes `dir/meta.json` and `dir/samples.csv`. Floats use the shortest
// decimal that round-trips exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// Numbers the identities seen under each camera 0..n_c-1 (ascending identity
// order) and stores the result in intra_label of every train sample.
Dataset relabel_intra_camera(const Dataset& ds);

}  // namespace camnorm

#endif  // CAMNORM_DATASET_HPP_
