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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "camnorm/adaptation.hpp"
#include "camnorm/checkpoint.hpp"
#include "camnorm/error.hpp"
#include "camnorm/evaluation.hpp"
#include "camnorm/experiment.hpp"
#include "camnorm/incremental.hpp"
#include "camnorm/layers.hpp"
#include "camnorm/loss.hpp"
#include "camnorm/model.hpp"
#include "camnorm/sampler.hpp"
#include "camnorm/synthetic.hpp"
#include "camnorm/trainer.hpp"
#include "test_util.hpp"

namespace camnorm {
namespace {

namespace fs = std::filesystem;
using testing::make_dataset;
using testing::make_sample;
using testing::numeric_grad;
using testing::rel_error;

constexpr std::uint64_t kSeeds[] = {1, 2, 3};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- shared trained models ----

ArchConfig arch_for(const Dataset& ds, NormKind kind) {
  ArchConfig a = ArchConfig::uniform(ds.dim, kind);
  return a;
}

TrainConfig desk_config(std::uint64_t seed, Supervision supervision = Supervision::kFull) {
  TrainConfig c = TrainConfig::desk();
  c.seed = seed;
  c.supervision = supervision;
  return c;
}

struct Cache {
  std::map<std::uint64_t, Dataset> default_sets, transfer_sets;
  std::map<std::pair<std::string, std::uint64_t>, Model> models;

  const Dataset& default_set(std::uint64_t seed) {
    auto it = default_sets.find(seed);
    if (it == default_sets.end()) {
      it = default_sets.emplace(seed, generate_synthetic(synth_preset("default", seed))).first;
    }
    return it->second;
  }
  const Dataset& transfer_set(std::uint64_t seed) {
    auto it = transfer_sets.find(seed);
    if (it == transfer_sets.end()) {
      it = transfer_sets.emplace(seed, generate_synthetic(synth_preset("direct-transfer", seed)))
               .first;
    }
    return it->second;
  }
  // key: "<preset>/<norm>/<supervision>"
  const Model& model(const std::string& key, std::uint64_t seed, const Dataset& ds,
                     NormKind kind, Supervision supervision) {
    auto it = models.find({key, seed});
    if (it == models.end()) {
      it = models.emplace(std::make_pair(key, seed),
                          train_model(ds, arch_for(ds, kind), desk_config(seed, supervision)).model)
               .first;
    }
    return it->second;
  }
};

Cache& cache() {
  static Cache c;
  return c;
}

EvalReport eval(const Model& m, const Dataset& ds, Adaptation a, std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive(0xe7a1);
  return evaluate_model(m, ds, a, EstimationOptions{}, rng);
}

// ---- 1. gradient soundness ----

NormParams random_norm_params(RngStream& rng, std::size_t d, NormKind kind) {
  NormParams p = NormParams::identity(d, kind);
  for (double& g : p.gamma) g = rng.uniform(0.5, 1.5);
  for (double& b : p.beta) b = rng.uniform(-0.5, 0.5);
  return p;
}

Outcome gradient_soundness() {
  const auto start = std::chrono::steady_clock::now();
  RngStream rng(101);
  std::map<std::string, double> worst;
  std::map<std::string, int> count;
  auto record = [&](const std::string& what, double err) {
    worst[what] = std::max(worst[what], err);
    ++count[what];
  };
  for (int trial = 0; trial < 100; ++trial) {
    for (NormKind kind : {NormKind::kCBN, NormKind::kBN}) {
      const std::size_t m = 8 + rng.index(12), d = 2 + rng.index(5);
      const std::vector<int> cams =
          kind == NormKind::kCBN ? testing::random_cameras(rng, m, 2 + static_cast<int>(rng.index(3)))
                                 : std::vector<int>{};
      Tensor x = gaussian(rng, {m, d});
      for (double& v : x.storage()) v = 3.0 * v + 1.0;
      NormParams p = random_norm_params(rng, d, kind);
      const Tensor r = gaussian(rng, {m, d});
      auto forward = [&] {
        return kind == NormKind::kCBN ? cbn_forward_train(x, cams, p)
                                      : bn_forward_train(x, p, false);
      };
      const NormOutput out = forward();
      const NormGrads g =
          kind == NormKind::kCBN ? cbn_backward(out.cache, r) : bn_backward(out.cache, r);
      auto loss = [&] { return testing::dot(forward().y.values(), r.values()); };
      double err = rel_error(g.dx.values(), numeric_grad(loss, x.values()));
      err = std::max(err, rel_error(g.dgamma, numeric_grad(loss, p.gamma)));
      err = std::max(err, rel_error(g.dbeta, numeric_grad(loss, p.beta)));
      record(kind == NormKind::kCBN ? "cbn" : "bn", err);
    }
    {
      Tensor x = gaussian(rng, {1 + rng.index(6), 4});
      Tensor w = gaussian(rng, {4, 3});
      std::vector<double> b(3);
      for (double& v : b) v = rng.gaussian();
      const Tensor r = gaussian(rng, {x.rows(), 3});
      const AffineGrads g = affine_backward(x, w, r);
      auto loss = [&] { return testing::dot(affine(x, w, b).values(), r.values()); };
      double err = rel_error(g.dx.values(), numeric_grad(loss, x.values()));
      err = std::max(err, rel_error(g.dw.values(), numeric_grad(loss, w.values())));
      err = std::max(err, rel_error(g.db, numeric_grad(loss, b)));
      record("affine", err);
    }
    {
      Tensor x = gaussian(rng, {4, 5});
      // Central differences straddling the kink are undefined; keep clear of it.
      for (double& v : x.storage()) {
        if (std::abs(v) < 1e-3) v += 0.01;
      }
      const Tensor r = gaussian(rng, {4, 5});
      const Tensor dx = relu_backward(x, r);
      auto loss = [&] { return testing::dot(relu(x).values(), r.values()); };
      record("relu", rel_error(dx.values(), numeric_grad(loss, x.values())));
    }
    {
      const std::size_t b = 1 + rng.index(6), c = 2 + rng.index(6);
      Tensor logits = gaussian(rng, {b, c});
      std::vector<std::size_t> labels(b);
      for (auto& l : labels) l = rng.index(c);
      const LossOutput out = cross_entropy(logits, labels);
      auto loss = [&] { return cross_entropy(logits, labels).loss; };
      record("softmax-ce", rel_error(out.dlogits.values(), numeric_grad(loss, logits.values())));
    }
  }
  const double elapsed = seconds_since(start);
  bool pass = elapsed < 30.0;
  std::string detail;
  for (const auto& [what, err] : worst) {
    pass = pass && err < 1e-4 && count[what] >= 100;
    detail += fmt("%s %.1e/%d  ", what.c_str(), err, count[what]);
  }
  return {pass, detail + fmt("(max rel err/instances, %.1f s)", elapsed)};
}

// ---- 2. CBN to BN reduction ----

Outcome cbn_bn_reduction() {
  RngStream rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.index(40), d = 1 + rng.index(8);
    const Tensor x = gaussian(rng, {m, d});
    NormParams p = random_norm_params(rng, d, NormKind::kCBN);
    const Tensor dy = gaussian(rng, {m, d});
    const std::vector<int> cams(m, static_cast<int>(rng.index(10)));
    const NormOutput c = cbn_forward_train(x, cams, p);
    const NormOutput b = bn_forward_train(x, p, false);
    const NormGrads gc = cbn_backward(c.cache, dy);
    const NormGrads gb = bn_backward(b.cache, dy);
    worst = std::max({worst, max_abs_diff(c.y.values(), b.y.values()),
                      max_abs_diff(gc.dx.values(), gb.dx.values()),
                      max_abs_diff(gc.dgamma, gb.dgamma), max_abs_diff(gc.dbeta, gb.dbeta)});
  }
  return {worst <= 1e-12, fmt("max-abs difference %.1e over 100 instances", worst)};
}

// ---- 3. alignment ----

Outcome alignment() {
  // Norm-layer inputs of realistic batches: P x K draws from the default
  // preset through a freshly initialized first affine layer.
  const Dataset& ds = cache().default_set(1);
  RngStream init(303);
  const Model m = model_build(arch_for(ds, NormKind::kCBN), init);
  const auto& layer = std::get<AffineLayer>(m.layers()[0]);
  const PkSampler sampler(ds);
  RngStream rng(304);
  const double eps = 1e-5;
  const NormParams identity = NormParams::identity(layer.bias.size(), NormKind::kCBN, eps);
  double worst_mean = 0.0, worst_var = 0.0, worst_exact = 0.0;
  std::size_t groups = 0;
  for (int b = 0; b < 1000; ++b) {
    const MiniBatch batch = sampler.sample(16, 4, rng);
    std::vector<std::size_t> idx;
    std::vector<int> cams;
    for (const BatchEntry& e : batch.entries) {
      idx.push_back(e.index);
      cams.push_back(ds.samples[e.index].camera);
    }
    const Tensor h = affine(feature_matrix(ds, idx), layer.weight, layer.bias);
    const NormOutput out = cbn_forward_train(h, cams, identity);
    for (const NormGroup& g : out.cache.groups) {
      const Moments y = reduce_moments(out.y, g.rows);
      for (std::size_t d = 0; d < y.mean.size(); ++d) {
        worst_mean = std::max(worst_mean, std::abs(y.mean[d]));
        worst_var = std::max(worst_var, std::abs(y.var[d] - 1.0));
        worst_exact = std::max(worst_exact, std::abs(y.var[d] - g.var[d] / (g.var[d] + eps)));
      }
      ++groups;
    }
  }
  return {worst_mean <= 1e-10 && worst_var <= 1e-3,
          fmt("%zu camera groups: max |mean| %.1e, max |var-1| %.1e (exact var/(var+eps) to %.1e)",
              groups, worst_mean, worst_var, worst_exact)};
}

// ---- 4 and 6. direct transfer ----

struct TransferRun {
  double cbn_rank1, bn_rank1, cbn_map, adabn_map;
};

std::vector<TransferRun>& transfer_runs() {
  static std::vector<TransferRun> runs;
  if (runs.empty()) {
    for (std::uint64_t seed : kSeeds) {
      const Dataset& ds = cache().transfer_set(seed);
      const Model& cbn = cache().model("dt/cbn", seed, ds, NormKind::kCBN, Supervision::kFull);
      const Model& bn = cache().model("dt/bn", seed, ds, NormKind::kBN, Supervision::kFull);
      const EvalReport rc = eval(cbn, ds, Adaptation::kCamera, seed);
      const EvalReport rb = eval(bn, ds, Adaptation::kNone, seed);
      const EvalReport ra = eval(bn, ds, Adaptation::kDataset, seed);
      runs.push_back({rc.rank1, rb.rank1, rc.map, ra.map});
    }
  }
  return runs;
}

Outcome direct_transfer() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> cbn, bn;
  for (const TransferRun& r : transfer_runs()) {
    cbn.push_back(r.cbn_rank1);
    bn.push_back(r.bn_rank1);
  }
  const double gap = 100.0 * (median(cbn) - median(bn));
  const double elapsed = seconds_since(start);
  return {gap >= 10.0 && elapsed < 180.0,
          fmt("median Rank-1 CBN %.1f%% vs BN %.1f%% (gap %.1f pp, %.0f s)", 100 * median(cbn),
              100 * median(bn), gap, elapsed)};
}

Outcome partial_replacement() {
  std::vector<double> cbn, adabn;
  for (const TransferRun& r : transfer_runs()) {
    cbn.push_back(r.cbn_map);
    adabn.push_back(r.adabn_map);
  }
  return {median(cbn) >= median(adabn),
          fmt("median mAP all-CBN %.1f%% vs all-BN + AdaBN %.1f%%", 100 * median(cbn),
              100 * median(adabn))};
}

// ---- 5. estimation sweep ----

Outcome estimation_sweep() {
  const auto start = std::chrono::steady_clock::now();
  const Dataset& ds = cache().default_set(1);
  const Model& m = cache().model("default/cbn", 1, ds, NormKind::kCBN, Supervision::kFull);
  const std::vector<std::size_t> ns{1, 5, 10, 20, 50};
  const std::vector<SweepRow> rows = sweep_nbatches(m, ds, ns, 10, EstimationOptions{}, 505);
  bool monotone = true;
  std::string detail = "var(mAP):";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt(" N=%zu %.2g", rows[i].n_batches, rows[i].var_map);
    if (i > 0 && rows[i].var_map > rows[i - 1].var_map) monotone = false;
  }
  const double gap = std::abs(rows[2].mean_map - rows[4].mean_map);
  const double elapsed = seconds_since(start);
  return {monotone && gap <= 1.0 && elapsed < 120.0,
          detail + fmt("; |mAP(10)-mAP(50)| %.2f pp (%.0f s)", gap, elapsed)};
}

// ---- 7 and 8. incremental ----

double retention(NormKind kind, IncrementalMode mode, bool warmup, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.train.seed = seed;
  cfg.arch.norm_kinds.assign(cfg.arch.widths.size(), kind);
  cfg.incremental_mode = mode;
  cfg.warmup = warmup;
  return run_incremental_experiment(cfg).report.final_retention_rank1();
}

std::map<std::string, double>& retention_medians() {
  static std::map<std::string, double> medians;
  if (medians.empty()) {
    for (NormKind kind : {NormKind::kCBN, NormKind::kBN}) {
      for (IncrementalMode mode : {IncrementalMode::kReplay, IncrementalMode::kDataFree}) {
        std::vector<double> r;
        for (std::uint64_t seed : kSeeds) r.push_back(retention(kind, mode, true, seed));
        medians[std::string(to_string(kind)) + "/" + std::string(to_string(mode))] = median(r);
      }
    }
  }
  return medians;
}

Outcome incremental_ordering() {
  const auto start = std::chrono::steady_clock::now();
  auto& r = retention_medians();
  const bool pass = r["cbn/replay"] >= r["cbn/data-free"] && r["bn/replay"] >= r["bn/data-free"] &&
                    r["cbn/replay"] >= r["bn/replay"] && r["cbn/data-free"] >= r["bn/data-free"];
  const double elapsed = seconds_since(start);
  return {pass && elapsed < 300.0,
          fmt("median Rank-1 retention: CBN replay %.3f, CBN data-free %.3f, BN replay %.3f, "
              "BN data-free %.3f (%.0f s)",
              r["cbn/replay"], r["cbn/data-free"], r["bn/replay"], r["bn/data-free"], elapsed)};
}

std::string raw_bytes(Model& m) {
  std::string out;
  for (const ParamView& p : m.backbone_parameters()) {
    out.append(reinterpret_cast<const char*>(p.values.data()), p.values.size_bytes());
  }
  for (std::size_t i = 0; i < m.num_norm_layers(); ++i) {
    for (const auto* v : {&m.norm(i).running_mean, &m.norm(i).running_var}) {
      out.append(reinterpret_cast<const char*>(v->data()), v->size() * sizeof(double));
    }
  }
  return out;
}

Outcome warmup_exactness() {
  WarmupMonitor monitor;
  std::size_t stop = 0;
  for (std::size_t i = 1; i <= 1000 && !stop; ++i) {
    if (monitor.push(1.25)) stop = i;
  }

  const Dataset a = generate_synthetic(synth_preset("incremental-a", 1));
  const Dataset b = generate_synthetic(synth_preset("incremental-b", 1));
  TrainConfig short_cfg = desk_config(1);
  short_cfg.epochs = 3;
  short_cfg.decay_epoch = 2;
  TrainedModel t = train_model(a, arch_for(a, NormKind::kBN), short_cfg);
  RngStream rng(808);
  add_head_for(t.model, b, false, rng);
  const std::string before = raw_bytes(t.model);
  const WarmupResult w = warmup_classifier(t.model, b, short_cfg, rng);
  const bool frozen = raw_bytes(t.model) == before;

  std::vector<double> without;
  for (std::uint64_t seed : kSeeds) {
    without.push_back(retention(NormKind::kCBN, IncrementalMode::kReplay, false, seed));
  }
  const double with = retention_medians()["cbn/replay"];
  return {stop == 54 && frozen && median(without) <= with,
          fmt("constant stream stops at %zu; backbone %s after %zu warm-up steps; "
              "CBN replay retention %.3f with vs %.3f without warm-up",
              stop, frozen ? "byte-identical" : "CHANGED", w.iterations, with, median(without))};
}

// ---- 9. exemplar memory ----

Outcome exemplar_memory() {
  bool hand = true;
  {
    // Tie goes to the lowest camera; identity 2 then has camera 0 only.
    const Dataset ds = make_dataset({make_sample({0.0}, 1, 0), make_sample({1.0}, 1, 1),
                                     make_sample({2.0}, 2, 0)});
    RngStream rng(1);
    const ExemplarMemory m = build_exemplar_memory(ds, rng);
    hand = hand && m.samples.size() == 2 && m.samples[0].camera == 0 && m.samples[1].camera == 0;
  }
  {
    // Second identity moves to the less used camera.
    const Dataset ds = make_dataset({make_sample({0.0}, 1, 0), make_sample({1.0}, 1, 1),
                                     make_sample({2.0}, 2, 0), make_sample({3.0}, 2, 1)});
    RngStream rng(1);
    const ExemplarMemory m = build_exemplar_memory(ds, rng);
    hand = hand && m.samples.size() == 2 && m.samples[0].camera == 0 && m.samples[1].camera == 1;
  }
  bool one_each = true;
  std::size_t worst_spread = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig c;
    c.train_identities = 50 + seed % 7;
    c.eval_identities = 4;
    c.seed = seed;
    const Dataset ds = generate_synthetic(c);
    RngStream rng(seed);
    const ExemplarMemory m = build_exemplar_memory(ds, rng);
    std::set<int> ids;
    for (const Sample& s : m.samples) ids.insert(s.identity);
    const auto expected = ds.identities_in(Split::kTrain);
    one_each = one_each && m.samples.size() == expected.size() &&
               ids == std::set<int>(expected.begin(), expected.end());
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [camera, n] : m.picked_counts) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    worst_spread = std::max(worst_spread, hi - lo);
  }
  return {hand && one_each && worst_spread <= 1,
          fmt("hand traces %s; one image per identity %s; max per-camera spread %zu over 100 sets",
              hand ? "match" : "DIFFER", one_each ? "yes" : "NO", worst_spread)};
}

// ---- 10. evaluation oracle ----

Outcome evaluation_oracle() {
  RngStream rng(1010);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t ng = 1 + rng.index(6), nq = 1 + rng.index(3);
    const Tensor palette = gaussian(rng, {3, 3});
    auto draw = [&](std::size_t n) {
      Tensor raw({n, 3});
      std::vector<int> ids(n), cams(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pick = rng.index(3);
        for (std::size_t d = 0; d < 3; ++d) raw.at(i, d) = palette.at(pick, d);
        ids[i] = static_cast<int>(rng.index(3));
        cams[i] = static_cast<int>(rng.index(2));
      }
      return make_feature_set(std::move(raw), ids, cams);
    };
    const FeatureSet q = draw(nq), g = draw(ng);
    std::vector<double> cmc(ng, 0.0);
    double map = 0.0;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < nq; ++i) {
      const testing::RankOracle o = testing::brute_force_rank(q, i, g);
      if (!o.scored) continue;
      ++scored;
      map += o.ap;
      for (std::size_t k = o.first; k <= ng; ++k) cmc[k - 1] += 1.0;
    }
    if (scored == 0) {
      const EvalReport r = evaluate(q, g);
      mismatches += r.n_queries != 0;
      continue;
    }
    for (double& v : cmc) v /= static_cast<double>(scored);
    const EvalReport r = evaluate(q, g);
    mismatches += !(r.n_queries == scored && r.map == map / static_cast<double>(scored) &&
                    r.cmc == cmc);
  }
  // Correct items at ranks 1 and 3 of 4.
  Tensor qf({1, 2}), gf({4, 2});
  qf.at(0, 0) = 1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    gf.at(i, 0) = std::cos(0.3 * static_cast<double>(i));
    gf.at(i, 1) = std::sin(0.3 * static_cast<double>(i));
  }
  const EvalReport hand = evaluate(make_feature_set(qf, {1}, {0}),
                                   make_feature_set(gf, {1, 2, 1, 3}, {1, 1, 2, 1}));
  const double ap_err = std::abs(hand.map - 5.0 / 6.0);
  return {mismatches == 0 && ap_err <= 1e-12,
          fmt("%zu of 1000 random instances differ from the ranked-list oracle; "
              "AP{1,3 of 4} = %.12f",
              mismatches, hand.map)};
}

// ---- 11. weak supervision ----

Outcome weak_supervision() {
  std::vector<double> full, weak, chance;
  for (std::uint64_t seed : kSeeds) {
    const Dataset& ds = cache().default_set(seed);
    const Model& f = cache().model("default/cbn", seed, ds, NormKind::kCBN, Supervision::kFull);
    const Model& w = cache().model("default/cbn-weak", seed, ds, NormKind::kCBN, Supervision::kWeak);
    full.push_back(eval(f, ds, Adaptation::kCamera, seed).rank1);
    weak.push_back(eval(w, ds, Adaptation::kCamera, seed).rank1);
    // Same labels, i.i.d. Gaussian features.
    const std::vector<int> cams{0, 1, 2, 3};
    RngStream est = RngStream(seed).derive(0xe7a1);
    const InferenceModel inf =
        inject_stats(f, estimate_camera_stats(f, ds, cams, EstimationOptions{}, est), cams);
    const QueryGallery qg = extract_features(inf, ds);
    RngStream noise = RngStream(seed).derive(0xc4a2ce);
    chance.push_back(evaluate(random_features(qg.query, noise), random_features(qg.gallery, noise))
                         .rank1);
  }
  const double f = 100 * median(full), w = 100 * median(weak), c = 100 * median(chance);
  return {f - w <= 15.0 && w - c >= 30.0,
          fmt("median Rank-1 weak %.1f%%, full %.1f%%, random features %.1f%%", w, f, c)};
}

// ---- 12. determinism ----

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct RunArtifacts {
  std::map<std::string, std::string> files;
};

RunArtifacts one_run(const fs::path& dir) {
  fs::remove_all(dir);
  ExperimentConfig cfg;
  cfg.seed = 12;
  cfg.train.seed = 12;
  cfg.train.epochs = 6;
  cfg.train.decay_epoch = 4;
  const Dataset ds = generate_synthetic(synth_preset("direct-transfer", cfg.seed));
  save_dataset(ds, dir / "data");
  const TrainedModel t = train_model(load_dataset(dir / "data"), arch_for(ds, NormKind::kCBN),
                                     cfg.train);
  save_checkpoint(t.model, {cfg.seed, cfg.train.epochs, cfg.hash()}, dir / "model.ckpt");
  std::string log;
  for (const EpochRecord& r : t.log.epochs) {
    log += nlohmann::json{{"epoch", r.epoch}, {"lr", r.lr}, {"mean_loss", r.mean_loss}}.dump() +
           "\n";
  }
  write_text(dir / "train_log.jsonl", log);
  const LoadedCheckpoint ckpt = load_checkpoint(dir / "model.ckpt");
  RngStream rng(cfg.seed);
  CameraStatsTable stats;
  const EvalReport r = evaluate_model(ckpt.model, ds, Adaptation::kCamera, cfg.estimation, rng, &stats);
  write_text(dir / "eval_report.json", r.to_json().dump(2));
  write_text(dir / "cmc.csv", r.cmc_csv());
  write_text(dir / "stats.json", stats.to_json().dump());
  cfg.train.epochs = 3;
  cfg.train.decay_epoch = 2;
  cfg.train.warmup_cap = 100;
  write_text(dir / "incremental_report.json",
             run_incremental_experiment(cfg).report.to_json().dump(2));

  RunArtifacts a;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      a.files[fs::relative(entry.path(), dir).string()] = read_bytes(entry.path());
    }
  }
  return a;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "camnorm_acceptance_determinism";
  const RunArtifacts first = one_run(root / "a");
  const RunArtifacts second = one_run(root / "b");
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : first.files) {
    auto it = second.files.find(name);
    if (it == second.files.end() || it->second != bytes) differing.push_back(name);
  }
  fs::remove_all(root);
  std::string names;
  for (const auto& [name, bytes] : first.files) names += (names.empty() ? "" : ", ") + name;
  return {differing.empty() && first.files.size() == second.files.size() &&
              first.files.size() >= 7,
          fmt("%zu files compared, %zu differ (%s)", first.files.size(), differing.size(),
              names.c_str())};
}

}  // namespace
}  // namespace camnorm

int main() {
  using camnorm::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient soundness", camnorm::gradient_soundness},
      {"CBN/BN reduction on one camera", camnorm::cbn_bn_reduction},
      {"per-camera alignment", camnorm::alignment},
      {"direct-transfer ordering", camnorm::direct_transfer},
      {"estimation batch sweep", camnorm::estimation_sweep},
      {"CBN vs BN + AdaBN endpoints", camnorm::partial_replacement},
      {"incremental retention ordering", camnorm::incremental_ordering},
      {"warm-up exactness", camnorm::warmup_exactness},
      {"exemplar memory", camnorm::exemplar_memory},
      {"evaluation oracle", camnorm::evaluation_oracle},
      {"weak supervision viability", camnorm::weak_supervision},
      {"determinism", camnorm::determinism},
  };
  int failures = 0;
  const char* only = std::getenv("CAMNORM_ACCEPTANCE_ONLY");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && std::to_string(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
