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

#include "camnorm/adaptation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "camnorm/error.hpp"
#include "camnorm/layers.hpp"
#include "camnorm/parallel.hpp"

namespace camnorm {
namespace {

// Running (count, mean, sum of squared deviations) merged batch by batch.
struct PooledMoments {
  std::size_t n = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  void merge(const Moments& batch, std::size_t m) {
    if (n == 0) {
      n = m;
      mean = batch.mean;
      m2.resize(mean.size());
      for (std::size_t d = 0; d < mean.size(); ++d) {
        m2[d] = batch.var[d] * static_cast<double>(m);
      }
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(m);
    const double total = na + nb;
    for (std::size_t d = 0; d < mean.size(); ++d) {
      const double delta = batch.mean[d] - mean[d];
      mean[d] += delta * nb / total;
      m2[d] += batch.var[d] * nb + delta * delta * na * nb / total;
    }
    n += m;
  }

  StatsEntry entry() const {
    StatsEntry e{mean, m2, n};
    for (double& v : e.var) v = std::max(0.0, v / static_cast<double>(n));
    return e;
  }
};

// Forwards `rows` of `ds` in batches with batch statistics at every Norm
// layer and returns the pooled moments of each Norm layer's input.
std::vector<StatsEntry> estimate_group(const Model& model, const Dataset& ds,
                                       std::vector<std::size_t> pool,
                                       const EstimationOptions& options,
                                       RngStream rng) {
  rng.shuffle(pool);
  const std::size_t take = std::min(pool.size(), options.n_batches * options.batch_size);
  pool.resize(take);

  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t begin = 0; begin < take; begin += options.batch_size) {
    batches.emplace_back(begin, std::min(take, begin + options.batch_size));
  }
  if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
    batches.pop_back();
    batches.back().second = take;
  }

  std::vector<PooledMoments> acc(model.num_norm_layers());
  for (const auto& [begin, end] : batches) {
    const std::span<const std::size_t> rows(pool.data() + begin, end - begin);
    const Tensor x = feature_matrix(ds, rows);
    model.forward_with(x, [&](std::size_t layer, const Tensor& h, const NormParams& p) {
      const Moments m = reduce_moments(h);
      acc[layer].merge(m, h.rows());
      return norm_forward_eval(h, m.mean, m.var, p);
    });
  }
  std::vector<StatsEntry> out;
  out.reserve(acc.size());
  for (const PooledMoments& a : acc) out.push_back(a.entry());
  return out;
}

std::vector<std::size_t> camera_pool(const Dataset& ds, const std::vector<std::size_t>& idx,
                                     int camera) {
  std::vector<std::size_t> pool;
  for (std::size_t i : idx) {
    if (ds.samples[i].camera == camera) pool.push_back(i);
  }
  return pool;
}

}  // namespace

std::string_view to_string(Adaptation a) {
  switch (a) {
    case Adaptation::kNone:
      return "none";
    case Adaptation::kCamera:
      return "cbn";
    case Adaptation::kDataset:
      return "adabn";
  }
  return "?";
}

Adaptation parse_adaptation(std::string_view text) {
  if (text == "none") return Adaptation::kNone;
  if (text == "cbn") return Adaptation::kCamera;
  if (text == "adabn") return Adaptation::kDataset;
  throw ConfigError("unknown adaptation '" + std::string(text) +
                    "' (expected none, cbn or adabn)");
}

const StatsEntry* CameraStatsTable::find(std::size_t layer, int camera) const {
  const auto it = entries.find({layer, camera});
  return it == entries.end() ? nullptr : &it->second;
}

nlohmann::json CameraStatsTable::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, e] : entries) {
    out.push_back({{"layer", key.first},
                   {"camera", key.second},
                   {"mean", e.mean},
                   {"var", e.var},
                   {"n_samples", e.n_samples},
                   {"N", n_batches},
                   {"seed", seed}});
  }
  return out;
}

void EstimationOptions::validate() const {
  if (n_batches == 0) throw ConfigError("estimation n_batches must be positive");
  if (batch_size == 0) throw ConfigError("estimation batch_size must be positive");
  if (splits.empty()) throw ConfigError("estimation needs at least one split");
}

CameraStatsTable estimate_camera_stats(const Model& model, const Dataset& ds,
                                       std::span<const int> cameras,
                                       const EstimationOptions& options, RngStream& rng) {
  options.validate();
  const std::vector<std::size_t> idx = ds.indices(options.splits);
  std::vector<std::vector<std::size_t>> pools;
  for (int c : cameras) {
    pools.push_back(camera_pool(ds, idx, c));
    if (pools.back().empty()) {
      throw StatsMissingError("camera " + std::to_string(c) + " has no images in " +
                              ds.name + " to estimate statistics from");
    }
  }
  const RngStream base(rng.next_u64());
  std::vector<std::vector<StatsEntry>> results(cameras.size());
  parallel_for(cameras.size(), [&](std::size_t i) {
    results[i] = estimate_group(model, ds, pools[i], options,
                                base.derive(static_cast<std::uint64_t>(cameras[i])));
  });

  CameraStatsTable table;
  table.n_batches = options.n_batches;
  table.seed = base.seed();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    for (std::size_t layer = 0; layer < results[i].size(); ++layer) {
      table.entries[{layer, cameras[i]}] = std::move(results[i][layer]);
    }
  }
  return table;
}

CameraStatsTable estimate_adabn_stats(const Model& model, const Dataset& ds,
                                      const EstimationOptions& options, RngStream& rng) {
  options.validate();
  const std::vector<std::size_t> idx = ds.indices(options.splits);
  if (idx.empty()) {
    throw StatsMissingError(ds.name + " has no images to estimate statistics from");
  }
  std::set<int> cameras;
  for (std::size_t i : idx) cameras.insert(ds.samples[i].camera);
  // A single camera yields the same stream as estimate_camera_stats.
  const RngStream base(rng.next_u64());
  const RngStream stream =
      base.derive(cameras.size() == 1 ? static_cast<std::uint64_t>(*cameras.begin())
                                      : ~std::uint64_t{0});
  const std::vector<StatsEntry> pooled = estimate_group(model, ds, idx, options, stream);

  CameraStatsTable table;
  table.n_batches = options.n_batches;
  table.seed = base.seed();
  for (int c : cameras) {
    for (std::size_t layer = 0; layer < pooled.size(); ++layer) {
      table.entries[{layer, c}] = pooled[layer];
    }
  }
  return table;
}

void InferenceModel::inject(const CameraStatsTable& table) {
  for (const auto& [key, e] : table.entries) {
    if (key.first >= model_->num_norm_layers()) {
      throw DimensionError("stats entry for norm layer " + std::to_string(key.first) +
                           " but the model has " +
                           std::to_string(model_->num_norm_layers()));
    }
    if (e.mean.size() != model_->norm(key.first).width() ||
        e.var.size() != e.mean.size()) {
      throw DimensionError("stats entry width mismatch at norm layer " +
                           std::to_string(key.first));
    }
    stats_.entries[key] = e;
  }
  stats_.n_batches = table.n_batches;
  stats_.seed = table.seed;
}

void InferenceModel::check_coverage(std::span<const int> cameras) const {
  for (std::size_t layer = 0; layer < model_->num_norm_layers(); ++layer) {
    if (model_->norm(layer).kind != NormKind::kCBN) continue;
    for (int c : cameras) {
      if (!stats_.find(layer, c)) {
        throw StatsMissingError("no statistics for norm layer " + std::to_string(layer) +
                                ", camera " + std::to_string(c));
      }
    }
  }
}

Tensor InferenceModel::forward(const Tensor& x, int camera) const {
  return model_->forward_with(
      x, [&](std::size_t layer, const Tensor& h, const NormParams& p) {
        if (const StatsEntry* e = stats_.find(layer, camera)) {
          return norm_forward_eval(h, e->mean, e->var, p);
        }
        if (p.kind == NormKind::kBN) {
          return norm_forward_eval(h, p.running_mean, p.running_var, p);
        }
        throw StatsMissingError("no statistics for norm layer " + std::to_string(layer) +
                                ", camera " + std::to_string(camera));
      });
}

InferenceModel inject_stats(const Model& model, const CameraStatsTable& table,
                            std::span<const int> cameras) {
  InferenceModel inference(model);
  inference.inject(table);
  inference.check_coverage(cameras);
  return inference;
}

Tensor forward_eval(const Model& model, const Tensor& x, int camera,
                    const CameraStatsTable& table) {
  InferenceModel inference(model);
  inference.inject(table);
  return inference.forward(x, camera);
}

}  // namespace camnorm
