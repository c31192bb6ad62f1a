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

#ifndef CAMNORM_SAMPLER_HPP_
#define CAMNORM_SAMPLER_HPP_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camnorm/dataset.hpp"
#include "camnorm/rng.hpp"

namespace camnorm {

// One exemplar per identity of a finished training set, balanced across its
// cameras.
struct ExemplarMemory {
  std::string source;
  std::vector<Sample> samples;
  std::map<int, std::size_t> picked_counts;  // camera -> picked images
};

// Position of a batch element: source 0 is the current dataset, source k > 0
// is memories[k - 1].
struct BatchEntry {
  std::size_t source = 0;
  std::size_t index = 0;

  friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

struct MiniBatch {
  std::vector<BatchEntry> entries;
  // camera -> positions into `entries`; every group has at least two members.
  std::map<int, std::vector<std::size_t>> camera_groups;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// What counts as a class for P x K sampling: the global identity, or the
// (camera, intra_label) pair under weak supervision.
enum class LabelKey { kIdentity, kIntraCamera };

// Identity-balanced sampler over the train split. Builds its index once.
class PkSampler {
 public:
  PkSampler(const Dataset& ds, LabelKey key = LabelKey::kIdentity);

  const Dataset& dataset() const { return *ds_; }
  std::size_t num_classes() const { return classes_.size(); }

  // P classes without replacement, K images each (with replacement when a
  // class has fewer than K images). Samples whose camera occurs once in the
  // assembled batch are dropped.
  MiniBatch sample(std::size_t p, std::size_t k, RngStream& rng) const;

  // Same draw as sample(), but keeps the per-class blocks (after singleton
  // filtering) so callers can interleave extra groups.
  std::vector<std::vector<BatchEntry>> sample_blocks(std::size_t p, std::size_t k,
                                                     RngStream& rng) const;

 private:
  const Dataset* ds_;
  std::vector<std::vector<std::size_t>> classes_;
};

MiniBatch pk_sample(const Dataset& ds, std::size_t p, std::size_t k,
                    RngStream& rng, LabelKey key = LabelKey::kIdentity);

// Greedy camera-balanced exemplar selection over the train split.
// Identities are visited in ascending order; each takes the available camera
// with the fewest picks so far (lowest camera id on ties) and a uniformly
// random image of itself under that camera.
ExemplarMemory build_exemplar_memory(const Dataset& ds, RngStream& rng);

struct ReplayOptions {
  std::size_t group_size = 4;
  // Upper bound on exemplar groups per batch; one group per old camera.
  std::size_t groups_per_batch = 4;
};

// P x K batch from the current set plus single-camera exemplar groups from
// the memories, shuffled in at random block positions. Old cameras with fewer
// than two exemplars are skipped.
MiniBatch mixed_replay_batch(const PkSampler& current,
                             std::span<const ExemplarMemory> memories,
                             std::size_t p, std::size_t k, RngStream& rng,
                             const ReplayOptions& options = {});

// Rebuilds camera_groups from the entries.
void assign_camera_groups(MiniBatch& batch, const Dataset& current,
                          std::span<const ExemplarMemory> memories);

const Sample& resolve(const BatchEntry& entry, const Dataset& current,
                      std::span<const ExemplarMemory> memories);

}  // namespace camnorm

#endif  // CAMNORM_SAMPLER_HPP_
