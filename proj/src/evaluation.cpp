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

#include "camnorm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "camnorm/error.hpp"
#include "camnorm/parallel.hpp"

namespace camnorm {
namespace {

struct QueryResult {
  bool scored = false;
  // 0-based rank of the first match among non-ignored gallery items.
  std::size_t first_hit = 0;
  double ap = 0.0;
};

QueryResult score_query(const FeatureSet& query, std::size_t q, const FeatureSet& gallery) {
  const std::size_t n = gallery.size();
  const auto qf = query.features.row(q);
  std::vector<double> dist(n);
  for (std::size_t g = 0; g < n; ++g) {
    const auto gf = gallery.features.row(g);
    double s = 0.0;
    for (std::size_t d = 0; d < qf.size(); ++d) {
      const double diff = qf[d] - gf[d];
      s += diff * diff;
    }
    dist[g] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  const int id = query.identities[q], cam = query.cameras[q];
  std::size_t n_relevant = 0;
  for (std::size_t g = 0; g < n; ++g) {
    if (gallery.identities[g] == id && gallery.cameras[g] != cam) ++n_relevant;
  }
  QueryResult r;
  if (n_relevant == 0) return r;
  r.scored = true;
  std::size_t rank = 0, hits = 0;
  bool first = true;
  for (std::size_t g : order) {
    const bool same_id = gallery.identities[g] == id;
    if (same_id && gallery.cameras[g] == cam) continue;
    ++rank;
    if (!same_id) continue;
    ++hits;
    if (first) {
      r.first_hit = rank - 1;
      first = false;
    }
    r.ap += static_cast<double>(hits) / static_cast<double>(rank);
  }
  r.ap /= static_cast<double>(n_relevant);
  return r;
}

void check_feature_set(const FeatureSet& fs, const char* what) {
  if (fs.features.rank() != 2 || fs.features.rows() != fs.size() ||
      fs.cameras.size() != fs.size()) {
    throw DimensionError(std::string(what) + " feature set columns disagree");
  }
}

}  // namespace

std::size_t FeatureSet::num_invalid() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), false));
}

FeatureSet make_feature_set(Tensor raw, std::vector<int> identities,
                            std::vector<int> cameras) {
  if (raw.rank() != 2 || raw.rows() != identities.size() ||
      cameras.size() != identities.size()) {
    throw DimensionError("feature matrix " + to_string(raw.shape()) + " for " +
                         std::to_string(identities.size()) + " labels");
  }
  FeatureSet fs{std::move(raw), std::move(identities), std::move(cameras), {}};
  fs.valid.assign(fs.size(), true);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto row = fs.features.row(i);
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm >= kMinFeatureNorm)) {
      std::fill(row.begin(), row.end(), 0.0);
      fs.valid[i] = false;
      continue;
    }
    for (double& v : row) v /= norm;
  }
  return fs;
}

QueryGallery extract_features(const InferenceModel& model, const Dataset& ds,
                              std::size_t chunk) {
  if (chunk == 0) throw ConfigError("extraction chunk size must be positive");
  const std::size_t f = model.model().feature_dim();
  auto extract = [&](Split split) {
    const std::vector<std::size_t> idx = ds.indices(split);
    std::map<int, std::vector<std::size_t>> by_camera;
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      by_camera[ds.samples[idx[pos]].camera].push_back(pos);
    }
    std::vector<int> cams;
    for (const auto& [c, unused] : by_camera) cams.push_back(c);
    model.check_coverage(cams);

    Tensor raw({idx.size(), f});
    std::vector<int> ids(idx.size()), cameras(idx.size());
    parallel_for(cams.size(), [&](std::size_t ci) {
      const std::vector<std::size_t>& positions = by_camera.at(cams[ci]);
      for (std::size_t begin = 0; begin < positions.size(); begin += chunk) {
        const std::size_t end = std::min(positions.size(), begin + chunk);
        std::vector<std::size_t> rows;
        for (std::size_t p = begin; p < end; ++p) rows.push_back(idx[positions[p]]);
        const Tensor out = model.forward(feature_matrix(ds, rows), cams[ci]);
        for (std::size_t p = begin; p < end; ++p) {
          const auto src = out.row(p - begin);
          std::copy(src.begin(), src.end(), raw.row(positions[p]).begin());
        }
      }
    });
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      ids[pos] = ds.samples[idx[pos]].identity;
      cameras[pos] = ds.samples[idx[pos]].camera;
    }
    return make_feature_set(std::move(raw), std::move(ids), std::move(cameras));
  };
  return {extract(Split::kQuery), extract(Split::kGallery)};
}

EvalReport evaluate(const FeatureSet& query, const FeatureSet& gallery) {
  check_feature_set(query, "query");
  check_feature_set(gallery, "gallery");
  if (query.size() == 0 || gallery.size() == 0) {
    throw EmptyGroupError("evaluation needs nonempty query and gallery sets");
  }
  if (query.features.cols() != gallery.features.cols()) {
    throw DimensionError("query features " + to_string(query.features.shape()) +
                         " vs gallery features " + to_string(gallery.features.shape()));
  }
  std::vector<QueryResult> results(query.size());
  parallel_for(query.size(),
               [&](std::size_t q) { results[q] = score_query(query, q, gallery); });

  EvalReport report;
  report.n_invalid_features = query.num_invalid() + gallery.num_invalid();
  report.cmc.assign(gallery.size(), 0.0);
  std::map<int, std::pair<std::size_t, std::size_t>> cam_hits;  // camera -> (n, hits)
  std::map<int, double> cam_ap;
  for (std::size_t q = 0; q < query.size(); ++q) {
    const QueryResult& r = results[q];
    if (!r.scored) {
      ++report.n_dropped;
      continue;
    }
    ++report.n_queries;
    report.cmc[r.first_hit] += 1.0;
    report.map += r.ap;
    auto& [n, hits] = cam_hits[query.cameras[q]];
    ++n;
    if (r.first_hit == 0) ++hits;
    cam_ap[query.cameras[q]] += r.ap;
  }
  if (report.n_queries == 0) return report;
  const double nq = static_cast<double>(report.n_queries);
  double acc = 0.0;
  for (double& v : report.cmc) {
    acc += v;
    v = acc / nq;
  }
  report.map /= nq;
  auto rank_at = [&](std::size_t k) { return report.cmc[std::min(k, report.cmc.size()) - 1]; };
  report.rank1 = rank_at(1);
  report.rank5 = rank_at(5);
  report.rank10 = rank_at(10);
  for (const auto& [cam, nh] : cam_hits) {
    const double n = static_cast<double>(nh.first);
    report.per_camera[cam] = {nh.first, static_cast<double>(nh.second) / n, cam_ap[cam] / n};
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json cams = nlohmann::json::object();
  for (const auto& [cam, m] : per_camera) {
    cams[std::to_string(cam)] = {{"n_queries", m.n_queries}, {"rank1", m.rank1}, {"mAP", m.map}};
  }
  return {{"rank1", rank1},
          {"rank5", rank5},
          {"rank10", rank10},
          {"mAP", map},
          {"n_queries", n_queries},
          {"n_dropped", n_dropped},
          {"n_invalid_features", n_invalid_features},
          {"per_camera", cams}};
}

std::string EvalReport::cmc_csv() const {
  std::ostringstream out;
  out << "k,fraction\n";
  for (std::size_t k = 0; k < cmc.size(); ++k) {
    out << k + 1 << ',' << nlohmann::json(cmc[k]).dump() << '\n';
  }
  return out.str();
}

FeatureSet random_features(const FeatureSet& like, RngStream& rng) {
  return make_feature_set(gaussian(rng, like.features.shape()), like.identities,
                          like.cameras);
}

EvalReport evaluate_model(const Model& model, const Dataset& ds, Adaptation adaptation,
                          const EstimationOptions& options, RngStream& rng,
                          CameraStatsTable* stats_out) {
  std::set<int> eval_cameras;
  for (Split s : {Split::kQuery, Split::kGallery}) {
    for (int c : ds.cameras_in(s)) eval_cameras.insert(c);
  }
  const std::vector<int> cams(eval_cameras.begin(), eval_cameras.end());
  CameraStatsTable table;
  switch (adaptation) {
    case Adaptation::kNone:
      break;
    case Adaptation::kCamera:
      table = estimate_camera_stats(model, ds, cams, options, rng);
      break;
    case Adaptation::kDataset:
      table = estimate_adabn_stats(model, ds, options, rng);
      break;
  }
  const InferenceModel inference = inject_stats(model, table, cams);
  if (stats_out) *stats_out = table;
  const QueryGallery qg = extract_features(inference, ds);
  return evaluate(qg.query, qg.gallery);
}

}  // namespace camnorm
