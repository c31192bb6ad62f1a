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

#ifndef CAMNORM_EVALUATION_HPP_
#define CAMNORM_EVALUATION_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "camnorm/adaptation.hpp"
#include "camnorm/dataset.hpp"
#include "camnorm/model.hpp"
#include "camnorm/rng.hpp"
#include "camnorm/tensor.hpp"
#include "json.hpp"

namespace camnorm {

// L2-normalized features with their labels. Rows whose raw norm is below
// kMinFeatureNorm stay zero and are flagged invalid.
struct FeatureSet {
  Tensor features;
  std::vector<int> identities;
  std::vector<int> cameras;
  std::vector<bool> valid;

  std::size_t size() const { return identities.size(); }
  std::size_t num_invalid() const;
};

inline constexpr double kMinFeatureNorm = 1e-12;

FeatureSet make_feature_set(Tensor raw, std::vector<int> identities,
                            std::vector<int> cameras);

struct QueryGallery {
  FeatureSet query;
  FeatureSet gallery;
};

// Bottleneck features for the query and gallery splits, computed camera by
// camera in chunks of `chunk` rows with that camera's statistics.
QueryGallery extract_features(const InferenceModel& model, const Dataset& ds,
                              std::size_t chunk = 256);

struct CameraMetrics {
  std::size_t n_queries = 0;
  double rank1 = 0.0;
  double map = 0.0;
};

struct EvalReport {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  double map = 0.0;
  std::size_t n_queries = 0;
  // Queries without any cross-camera match, excluded from the metrics.
  std::size_t n_dropped = 0;
  std::size_t n_invalid_features = 0;
  // cmc[k-1] = fraction of scored queries matched within the top k.
  std::vector<double> cmc;
  std::map<int, CameraMetrics> per_camera;

  nlohmann::json to_json() const;
  // "k,fraction" lines, header included.
  std::string cmc_csv() const;
};

// Cross-camera retrieval: squared Euclidean distance, gallery entries with
// the query's identity and camera ignored, ties ranked by gallery index.
EvalReport evaluate(const FeatureSet& query, const FeatureSet& gallery);

// Chance-level reference: i.i.d. Gaussian features with the labels of `like`.
FeatureSet random_features(const FeatureSet& like, RngStream& rng);

// Estimate (per `adaptation`), inject, extract and evaluate on ds's
// query/gallery splits.
EvalReport evaluate_model(const Model& model, const Dataset& ds, Adaptation adaptation,
                          const EstimationOptions& options, RngStream& rng,
                          CameraStatsTable* stats_out = nullptr);

}  // namespace camnorm

#endif  // CAMNORM_EVALUATION_HPP_
