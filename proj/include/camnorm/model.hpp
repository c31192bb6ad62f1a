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

#ifndef CAMNORM_MODEL_HPP_
#define CAMNORM_MODEL_HPP_

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "camnorm/dataset.hpp"
#include "camnorm/layers.hpp"
#include "camnorm/rng.hpp"
#include "camnorm/tensor.hpp"
#include "json.hpp"

namespace camnorm {

// Backbone shape: one Affine -> Norm block per width, ReLU between blocks.
// The last Norm is the bottleneck whose output is the retrieval feature.
struct ArchConfig {
  std::size_t input_dim = 32;
  std::vector<std::size_t> widths{64, 64, 32};
  std::vector<NormKind> norm_kinds{NormKind::kCBN, NormKind::kCBN, NormKind::kCBN};
  double eps = 1e-5;
  double bn_momentum = 0.1;

  static ArchConfig uniform(std::size_t input_dim, NormKind kind);
  void validate() const;
  nlohmann::json to_json() const;
  static ArchConfig from_json(const nlohmann::json& j);

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct AffineLayer {
  Tensor weight;  // [in, out]
  std::vector<double> bias;
};
struct ReluLayer {};
struct NormLayer {
  NormParams params;
};
using Layer = std::variant<AffineLayer, ReluLayer, NormLayer>;

inline constexpr int kAllCameras = -1;

struct Classifier {
  Tensor weight;  // [features, classes]
  std::vector<double> bias;
  std::size_t num_classes() const { return bias.size(); }
};

enum class HeadKind { kSingle, kPerCamera };

// Classifier(s) for one training set. A single head classifies global
// identities (label i <-> identities[i]); a per-camera head keeps one
// classifier per camera over that camera's intra labels.
struct Head {
  std::string source;
  HeadKind kind = HeadKind::kSingle;
  std::vector<int> identities;
  std::map<int, Classifier> classifiers;

  const Classifier& classifier_for(int camera) const;
  Classifier& classifier_for(int camera);
  int classifier_key(int camera) const {
    return kind == HeadKind::kSingle ? kAllCameras : camera;
  }
  // Class index of `s` in the classifier that handles it.
  std::size_t label_of(const Sample& s) const;
};

struct ParamView {
  std::string name;
  std::span<double> values;
  bool decay = true;
};

// Gradients keyed by ParamView::name; a missing key means "no gradient".
using GradientMap = std::map<std::string, std::vector<double>>;

struct LayerCache {
  Tensor input;
  NormCache norm;  // filled for Norm layers only
};

struct TrainForward {
  Tensor features;
  std::vector<LayerCache> caches;
};

// Computes a Norm layer's output given its ordinal among Norm layers.
using NormFn = std::function<Tensor(std::size_t norm_index, const Tensor& input,
                                    const NormParams& params)>;

class Model {
 public:
  Model() = default;
  Model(ArchConfig arch, std::vector<Layer> layers);

  const ArchConfig& arch() const { return arch_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  std::size_t input_dim() const { return arch_.input_dim; }
  std::size_t feature_dim() const { return arch_.widths.back(); }
  std::size_t num_norm_layers() const { return norm_positions_.size(); }
  const NormParams& norm(std::size_t norm_index) const;
  NormParams& norm(std::size_t norm_index);

  const std::vector<Head>& heads() const { return heads_; }
  std::vector<Head>& heads() { return heads_; }
  Head* find_head(std::string_view source);
  const Head* find_head(std::string_view source) const;
  Head& add_single_head(const std::string& source, std::vector<int> identities,
                        RngStream& rng);
  Head& add_per_camera_head(const std::string& source,
                            const std::map<int, std::size_t>& classes_per_camera,
                            RngStream& rng);
  void remove_head(std::string_view source);

  // Training-mode pass: CBN layers normalize per camera, BN layers over the
  // batch (updating running stats when `update_running` is set).
  TrainForward forward_train(const Tensor& x, std::span<const int> cameras,
                             bool update_running = true);
  // Backbone gradients for d(loss)/d(features).
  GradientMap backward(const TrainForward& fwd, const Tensor& dfeatures) const;

  // Backbone pass where every Norm layer is delegated to `normalize`.
  Tensor forward_with(const Tensor& x, const NormFn& normalize) const;

  std::vector<ParamView> backbone_parameters();
  std::vector<ParamView> head_parameters(Head& head);
  std::vector<ParamView> parameters();

  static std::string head_param_prefix(const Head& head, int classifier_key);

 private:
  ArchConfig arch_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> norm_positions_;
  std::vector<Head> heads_;
};

// He-style init: affine weights ~ N(0, 2 / fan_in), biases 0, gamma 1, beta 0.
Model model_build(const ArchConfig& arch, RngStream& rng);

// Heads sized to the train label space of `ds`: global identities, or the
// per-camera intra labels when the set carries them and `weak` is set.
Head& add_head_for(Model& model, const Dataset& ds, bool weak, RngStream& rng);

}  // namespace camnorm

#endif  // CAMNORM_MODEL_HPP_
