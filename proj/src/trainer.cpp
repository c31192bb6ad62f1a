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

#include "camnorm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>

#include "camnorm/error.hpp"
#include "camnorm/loss.hpp"
#include "camnorm/optimizer.hpp"

namespace camnorm {
using nlohmann::json;

TrainConfig TrainConfig::reference() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 20;
  c.decay_epoch = 14;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be positive");
  if (!(decay_factor > 0.0)) throw ConfigError("train.decay_factor must be positive");
  if (epochs > 0 && decay_epoch >= epochs) {
    throw ConfigError("train.decay_epoch must be below train.epochs");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("train.momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (p == 0 || k == 0) throw ConfigError("train.p and train.k must be positive");
  if (warmup_window == 0 || warmup_patience == 0) {
    throw ConfigError("warm-up window and patience must be positive");
  }
}

json TrainConfig::to_json() const {
  return {{"lr0", lr0},
          {"decay_epoch", decay_epoch},
          {"decay_factor", decay_factor},
          {"epochs", epochs},
          {"momentum", momentum},
          {"weight_decay", weight_decay},
          {"p", p},
          {"k", k},
          {"seed", seed},
          {"supervision", supervision == Supervision::kFull ? "full" : "weak"},
          {"batches_per_epoch", batches_per_epoch},
          {"replay_group_size", replay.group_size},
          {"replay_groups_per_batch", replay.groups_per_batch},
          {"warmup_window", warmup_window},
          {"warmup_tolerance", warmup_tolerance},
          {"warmup_patience", warmup_patience},
          {"warmup_cap", warmup_cap}};
}

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  static const std::set<std::string> kKeys = {
      "lr0", "decay_epoch", "decay_factor", "epochs", "momentum", "weight_decay",
      "p", "k", "seed", "supervision", "batches_per_epoch", "replay_group_size",
      "replay_groups_per_batch", "warmup_window", "warmup_tolerance",
      "warmup_patience", "warmup_cap"};
  if (!j.is_object()) throw ConfigError("train config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown train key '" + key + "'");
  }
  try {
    c.lr0 = j.value("lr0", c.lr0);
    c.decay_epoch = j.value("decay_epoch", c.decay_epoch);
    c.decay_factor = j.value("decay_factor", c.decay_factor);
    c.epochs = j.value("epochs", c.epochs);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.p = j.value("p", c.p);
    c.k = j.value("k", c.k);
    c.seed = j.value("seed", c.seed);
    if (j.contains("supervision")) {
      const auto s = j.at("supervision").get<std::string>();
      if (s == "full") {
        c.supervision = Supervision::kFull;
      } else if (s == "weak") {
        c.supervision = Supervision::kWeak;
      } else {
        throw ConfigError("train.supervision must be 'full' or 'weak'");
      }
    }
    c.batches_per_epoch = j.value("batches_per_epoch", c.batches_per_epoch);
    c.replay.group_size = j.value("replay_group_size", c.replay.group_size);
    c.replay.groups_per_batch =
        j.value("replay_groups_per_batch", c.replay.groups_per_batch);
    c.warmup_window = j.value("warmup_window", c.warmup_window);
    c.warmup_tolerance = j.value("warmup_tolerance", c.warmup_tolerance);
    c.warmup_patience = j.value("warmup_patience", c.warmup_patience);
    c.warmup_cap = j.value("warmup_cap", c.warmup_cap);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return epoch < cfg.decay_epoch ? cfg.lr0 : cfg.lr0 / cfg.decay_factor;
}

std::string RunLog::to_jsonl() const {
  std::string out;
  for (const EpochRecord& r : epochs) {
    out += json{{"epoch", r.epoch},
                {"lr", r.lr},
                {"mean_loss", r.mean_loss},
                {"wall_ms", r.wall_ms}}
               .dump();
    out += "\n";
  }
  return out;
}

StepOutput compute_step(Model& model, const Dataset& current,
                        std::span<const ExemplarMemory> memories,
                        const MiniBatch& batch, bool update_running,
                        const std::string& only_head) {
  StepOutput out;
  out.batch_size = batch.size();
  if (batch.empty()) return out;

  Tensor x({batch.size(), model.input_dim()});
  std::vector<int> cameras(batch.size());
  // (head index, classifier key) -> batch positions
  std::map<std::pair<std::size_t, int>, std::vector<std::size_t>> routes;
  std::vector<std::size_t> labels(batch.size());
  std::map<std::size_t, std::size_t> head_of_source;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const BatchEntry& e = batch.entries[i];
    const Sample& s = resolve(e, current, memories);
    if (s.features.size() != model.input_dim()) {
      throw DimensionError("sample has " + std::to_string(s.features.size()) +
                           " features, model expects " +
                           std::to_string(model.input_dim()));
    }
    std::copy(s.features.begin(), s.features.end(), x.row(i).begin());
    cameras[i] = s.camera;
    auto it = head_of_source.find(e.source);
    if (it == head_of_source.end()) {
      const std::string& name =
          e.source == 0 ? current.name : memories[e.source - 1].source;
      const Head* h = model.find_head(name);
      if (!h) throw ConfigError("model has no head for '" + name + "'");
      it = head_of_source.emplace(e.source, static_cast<std::size_t>(h - model.heads().data()))
               .first;
    }
    const Head& head = model.heads()[it->second];
    labels[i] = head.label_of(s);
    routes[{it->second, head.classifier_key(s.camera)}].push_back(i);
  }

  const bool backbone_frozen = !only_head.empty();
  TrainForward fwd = model.forward_train(x, cameras, update_running && !backbone_frozen);
  Tensor dfeatures(fwd.features.shape());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& [route, rows] : routes) {
    Head& head = model.heads()[route.first];
    Classifier& clf = head.classifiers.at(route.second);
    const bool trainable = !backbone_frozen || head.source == only_head;
    const Tensor feats = gather_rows(fwd.features, rows);
    std::vector<std::size_t> group_labels;
    group_labels.reserve(rows.size());
    for (std::size_t r : rows) group_labels.push_back(labels[r]);
    LossOutput ce = cross_entropy(affine(feats, clf.weight, clf.bias), group_labels);
    const double weight = static_cast<double>(rows.size()) * inv_b;
    out.loss += weight * ce.loss;
    if (!trainable) continue;
    for (double& v : ce.dlogits.storage()) v *= weight;
    AffineGrads g = affine_backward(feats, clf.weight, ce.dlogits);
    const std::string prefix = Model::head_param_prefix(head, route.second);
    out.grads[prefix + ".weight"] = std::move(g.dw.storage());
    out.grads[prefix + ".bias"] = std::move(g.db);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = g.dx.row(i);
      auto dst = dfeatures.row(rows[i]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  }
  if (!backbone_frozen) out.grads.merge(model.backward(fwd, dfeatures));
  return out;
}

RunLog train(Model& model, const Dataset& ds, const TrainConfig& cfg, RngStream& rng,
             std::span<const ExemplarMemory> memories) {
  cfg.validate();
  RunLog log;
  if (cfg.epochs == 0) return log;
  if (!model.find_head(ds.name)) {
    throw ConfigError("model has no head for training set '" + ds.name + "'");
  }
  const bool weak = cfg.supervision == Supervision::kWeak;
  const PkSampler sampler(ds, weak ? LabelKey::kIntraCamera : LabelKey::kIdentity);
  const std::size_t n_train = ds.indices(Split::kTrain).size();
  if (n_train == 0) throw SamplingError(ds.name + " has no train samples");
  const std::size_t per_epoch =
      cfg.batches_per_epoch ? cfg.batches_per_epoch
                            : (n_train + cfg.p * cfg.k - 1) / (cfg.p * cfg.k);

  Sgd sgd({cfg.momentum, cfg.weight_decay});
  const std::vector<ParamView> params = model.parameters();
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double lr = lr_at(epoch, cfg);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const MiniBatch batch =
          memories.empty()
              ? sampler.sample(cfg.p, cfg.k, rng)
              : mixed_replay_batch(sampler, memories, cfg.p, cfg.k, rng, cfg.replay);
      if (batch.empty()) continue;
      StepOutput step = compute_step(model, ds, memories, batch, true);
      sgd.step(params, step.grads, lr);
      loss_sum += step.loss;
      ++steps;
    }
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    if (steps == 0) log.warnings.push_back("epoch " + std::to_string(epoch) + " had no usable batches");
    log.epochs.push_back({epoch, lr, steps ? loss_sum / static_cast<double>(steps) : 0.0,
                          elapsed.count()});
  }
  return log;
}

WarmupMonitor::WarmupMonitor(std::size_t window, double tolerance, std::size_t patience)
    : window_(window), tolerance_(tolerance), patience_(patience) {}

bool WarmupMonitor::push(double loss) {
  ++iterations_;
  losses_.push_back(loss);
  sum_ += loss;
  if (losses_.size() > window_) {
    sum_ -= losses_.front();
    losses_.pop_front();
  }
  // Recomputed from the window so the running sum cannot drift.
  double mean = 0.0;
  for (double v : losses_) mean += v;
  mean /= static_cast<double>(losses_.size());
  sum_ = mean * static_cast<double>(losses_.size());
  if (losses_.size() == window_ && std::abs(loss - mean) <= tolerance_) {
    ++counter_;
  } else {
    counter_ = 0;
  }
  return counter_ >= patience_;
}

WarmupResult warmup_classifier(Model& model, const Dataset& ds, const TrainConfig& cfg,
                               RngStream& rng) {
  cfg.validate();
  Head* head = model.find_head(ds.name);
  if (!head) throw ConfigError("model has no head for '" + ds.name + "'");
  const bool weak = head->kind == HeadKind::kPerCamera;
  const PkSampler sampler(ds, weak ? LabelKey::kIntraCamera : LabelKey::kIdentity);
  const std::size_t cap = cfg.warmup_cap ? cfg.warmup_cap : 10 * cfg.warmup_window;

  WarmupMonitor monitor(cfg.warmup_window, cfg.warmup_tolerance, cfg.warmup_patience);
  Sgd sgd({cfg.momentum, cfg.weight_decay});
  const std::vector<ParamView> params = model.head_parameters(*head);
  WarmupResult result;
  while (result.iterations < cap) {
    const MiniBatch batch = sampler.sample(cfg.p, cfg.k, rng);
    if (batch.empty()) continue;
    StepOutput step = compute_step(model, ds, {}, batch, false, ds.name);
    sgd.step(params, step.grads, cfg.lr0);
    result.losses.push_back(step.loss);
    ++result.iterations;
    if (monitor.push(step.loss)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace camnorm
