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

#include "camnorm/sampler.hpp"

#include <algorithm>
#include <set>

#include "camnorm/error.hpp"

namespace camnorm {

const Sample& resolve(const BatchEntry& entry, const Dataset& current,
                      std::span<const ExemplarMemory> memories) {
  if (entry.source == 0) return current.samples.at(entry.index);
  return memories[entry.source - 1].samples.at(entry.index);
}

void assign_camera_groups(MiniBatch& batch, const Dataset& current,
                          std::span<const ExemplarMemory> memories) {
  batch.camera_groups.clear();
  for (std::size_t i = 0; i < batch.entries.size(); ++i) {
    batch.camera_groups[resolve(batch.entries[i], current, memories).camera]
        .push_back(i);
  }
}

PkSampler::PkSampler(const Dataset& ds, LabelKey key) : ds_(&ds) {
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    if (s.split != Split::kTrain) continue;
    if (key == LabelKey::kIdentity) {
      by_class[{s.identity, 0}].push_back(i);
    } else {
      if (!s.intra_label) {
        throw LabelError("train sample " + std::to_string(i) +
                         " has no intra-camera label");
      }
      by_class[{s.camera, *s.intra_label}].push_back(i);
    }
  }
  classes_.reserve(by_class.size());
  for (auto& [label, members] : by_class) classes_.push_back(std::move(members));
}

std::vector<std::vector<BatchEntry>> PkSampler::sample_blocks(
    std::size_t p, std::size_t k, RngStream& rng) const {
  if (classes_.size() < p) {
    throw SamplingError("need " + std::to_string(p) + " identities, " +
                        ds_->name + " has " + std::to_string(classes_.size()));
  }
  // Partial Fisher-Yates: the first p slots become the chosen classes.
  std::vector<std::size_t> order(classes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = 0; i < p; ++i) {
    std::swap(order[i], order[i + rng.index(order.size() - i)]);
  }

  std::vector<std::vector<BatchEntry>> blocks(p);
  std::map<int, std::size_t> camera_count;
  for (std::size_t b = 0; b < p; ++b) {
    std::vector<std::size_t> pool = classes_[order[b]];
    if (pool.size() >= k) {
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      }
      pool.resize(k);
    } else {
      std::vector<std::size_t> drawn(k);
      for (auto& d : drawn) d = pool[rng.index(pool.size())];
      pool = std::move(drawn);
    }
    for (std::size_t idx : pool) {
      blocks[b].push_back({0, idx});
      ++camera_count[ds_->samples[idx].camera];
    }
  }
  for (auto& block : blocks) {
    std::erase_if(block, [&](const BatchEntry& e) {
      return camera_count[ds_->samples[e.index].camera] == 1;
    });
  }
  std::erase_if(blocks, [](const auto& block) { return block.empty(); });
  return blocks;
}

MiniBatch PkSampler::sample(std::size_t p, std::size_t k, RngStream& rng) const {
  MiniBatch batch;
  for (auto& block : sample_blocks(p, k, rng)) {
    batch.entries.insert(batch.entries.end(), block.begin(), block.end());
  }
  assign_camera_groups(batch, *ds_, {});
  return batch;
}

MiniBatch pk_sample(const Dataset& ds, std::size_t p, std::size_t k,
                    RngStream& rng, LabelKey key) {
  return PkSampler(ds, key).sample(p, k, rng);
}

ExemplarMemory build_exemplar_memory(const Dataset& ds, RngStream& rng) {
  // identity -> camera -> train sample indices
  std::map<int, std::map<int, std::vector<std::size_t>>> images;
  std::set<int> seen;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    seen.insert(s.identity);
    if (s.split == Split::kTrain) images[s.identity][s.camera].push_back(i);
  }
  for (int id : ds.identities) {
    if (!seen.contains(id)) {
      throw DataIntegrityError(ds.name + ": identity " + std::to_string(id) +
                               " has no images");
    }
  }
  if (images.empty()) {
    throw DataIntegrityError(ds.name + ": no train samples for exemplar memory");
  }

  ExemplarMemory memory;
  memory.source = ds.name;
  for (const auto& [identity, by_camera] : images) {
    auto picked = [&](int camera) -> std::size_t {
      const auto it = memory.picked_counts.find(camera);
      return it == memory.picked_counts.end() ? 0 : it->second;
    };
    int best = by_camera.begin()->first;
    std::size_t best_count = picked(best);
    for (const auto& [camera, members] : by_camera) {
      const std::size_t count = picked(camera);
      if (count < best_count) {
        best = camera;
        best_count = count;
      }
    }
    const auto& members = by_camera.at(best);
    memory.samples.push_back(ds.samples[members[rng.index(members.size())]]);
    ++memory.picked_counts[best];
  }
  return memory;
}

MiniBatch mixed_replay_batch(const PkSampler& current,
                             std::span<const ExemplarMemory> memories,
                             std::size_t p, std::size_t k, RngStream& rng,
                             const ReplayOptions& options) {
  auto blocks = current.sample_blocks(p, k, rng);

  // (memory source, camera) -> exemplar positions
  std::vector<std::pair<std::size_t, std::vector<std::size_t>>> candidates;
  for (std::size_t m = 0; m < memories.size(); ++m) {
    std::map<int, std::vector<std::size_t>> by_camera;
    for (std::size_t i = 0; i < memories[m].samples.size(); ++i) {
      by_camera[memories[m].samples[i].camera].push_back(i);
    }
    for (auto& [camera, members] : by_camera) {
      if (members.size() >= 2) candidates.emplace_back(m + 1, std::move(members));
    }
  }

  if (!candidates.empty() && options.groups_per_batch > 0) {
    rng.shuffle(candidates);
    const std::size_t n_groups = std::min(options.groups_per_batch, candidates.size());
    for (std::size_t g = 0; g < n_groups; ++g) {
      auto& [source, pool] = candidates[g];
      const std::size_t take = std::min(options.group_size, pool.size());
      for (std::size_t i = 0; i < take; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      }
      std::vector<BatchEntry> group;
      for (std::size_t i = 0; i < take; ++i) group.push_back({source, pool[i]});
      blocks.push_back(std::move(group));
    }
    rng.shuffle(blocks);
  }

  MiniBatch batch;
  for (auto& block : blocks) {
    batch.entries.insert(batch.entries.end(), block.begin(), block.end());
  }
  assign_camera_groups(batch, current.dataset(), memories);
  return batch;
}

}  // namespace camnorm
