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

#include "camnorm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "camnorm/error.hpp"

namespace camnorm {
using nlohmann::json;

namespace {

Classifier make_classifier(std::size_t features, std::size_t classes,
                           RngStream& rng) {
  Classifier c{gaussian(rng, {features, classes}), std::vector<double>(classes, 0.0)};
  const double stddev = std::sqrt(2.0 / static_cast<double>(features));
  for (double& v : c.weight.storage()) v *= stddev;
  return c;
}

}  // namespace

ArchConfig ArchConfig::uniform(std::size_t input_dim, NormKind kind) {
  ArchConfig a;
  a.input_dim = input_dim;
  a.norm_kinds.assign(a.widths.size(), kind);
  return a;
}

void ArchConfig::validate() const {
  if (input_dim == 0) throw ConfigError("arch.input_dim must be positive");
  if (widths.empty()) throw ConfigError("arch.widths must be nonempty");
  if (std::find(widths.begin(), widths.end(), 0u) != widths.end()) {
    throw ConfigError("arch.widths must be positive");
  }
  if (norm_kinds.size() != widths.size()) {
    throw ConfigError("arch has " + std::to_string(widths.size()) +
                      " blocks but " + std::to_string(norm_kinds.size()) +
                      " norm kinds");
  }
  if (!(eps > 0.0)) throw ConfigError("arch.eps must be positive");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
    throw ConfigError("arch.bn_momentum must lie in (0, 1]");
  }
}

json ArchConfig::to_json() const {
  std::vector<std::string> kinds;
  for (NormKind k : norm_kinds) kinds.emplace_back(to_string(k));
  return {{"input_dim", input_dim}, {"widths", widths}, {"norm_kinds", kinds},
          {"eps", eps}, {"bn_momentum", bn_momentum}};
}

ArchConfig ArchConfig::from_json(const json& j) {
  static const std::set<std::string> kKeys = {"input_dim", "widths", "norm_kinds",
                                              "eps", "bn_momentum"};
  if (!j.is_object()) throw ConfigError("arch config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown arch key '" + key + "'");
  }
  ArchConfig a;
  try {
    a.input_dim = j.value("input_dim", a.input_dim);
    a.widths = j.value("widths", a.widths);
    if (j.contains("norm_kinds")) {
      a.norm_kinds.clear();
      for (const auto& k : j.at("norm_kinds")) {
        a.norm_kinds.push_back(parse_norm_kind(k.get<std::string>()));
      }
    } else {
      a.norm_kinds.assign(a.widths.size(), NormKind::kCBN);
    }
    a.eps = j.value("eps", a.eps);
    a.bn_momentum = j.value("bn_momentum", a.bn_momentum);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("arch config: ") + e.what());
  }
  a.validate();
  return a;
}

const Classifier& Head::classifier_for(int camera) const {
  const auto it = classifiers.find(classifier_key(camera));
  if (it == classifiers.end()) {
    throw LabelError("head '" + source + "' has no classifier for camera " +
                     std::to_string(camera));
  }
  return it->second;
}

Classifier& Head::classifier_for(int camera) {
  return const_cast<Classifier&>(std::as_const(*this).classifier_for(camera));
}

std::size_t Head::label_of(const Sample& s) const {
  if (kind == HeadKind::kPerCamera) {
    if (!s.intra_label) {
      throw LabelError("sample of identity " + std::to_string(s.identity) +
                       " lacks an intra-camera label");
    }
    const std::size_t label = static_cast<std::size_t>(*s.intra_label);
    if (*s.intra_label < 0 || label >= classifier_for(s.camera).num_classes()) {
      throw LabelError("intra label " + std::to_string(*s.intra_label) +
                       " out of range for camera " + std::to_string(s.camera));
    }
    return label;
  }
  const auto it = std::lower_bound(identities.begin(), identities.end(), s.identity);
  if (it == identities.end() || *it != s.identity) {
    throw LabelError("identity " + std::to_string(s.identity) +
                     " is not in the label space of head '" + source + "'");
  }
  return static_cast<std::size_t>(it - identities.begin());
}

Model::Model(ArchConfig arch, std::vector<Layer> layers)
    : arch_(std::move(arch)), layers_(std::move(layers)) {
  arch_.validate();
  std::size_t width = arch_.input_dim;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (const auto* a = std::get_if<AffineLayer>(&layers_[i])) {
      if (a->weight.rows() != width || a->bias.size() != a->weight.cols()) {
        throw ConfigError("layer " + std::to_string(i) + " weight " +
                          to_string(a->weight.shape()) +
                          " does not conform to input width " +
                          std::to_string(width));
      }
      width = a->weight.cols();
    } else if (const auto* n = std::get_if<NormLayer>(&layers_[i])) {
      if (n->params.width() != width) {
        throw ConfigError("norm layer " + std::to_string(i) + " has width " +
                          std::to_string(n->params.width()) + ", expected " +
                          std::to_string(width));
      }
      n->params.validate();
      norm_positions_.push_back(i);
    }
  }
  if (layers_.empty() || !std::holds_alternative<NormLayer>(layers_.back())) {
    throw ConfigError("the layer before the head must be a Norm bottleneck");
  }
  if (width != feature_dim()) {
    throw ConfigError("final width " + std::to_string(width) +
                      " does not match arch feature width");
  }
}

const NormParams& Model::norm(std::size_t norm_index) const {
  return std::get<NormLayer>(layers_.at(norm_positions_.at(norm_index))).params;
}

NormParams& Model::norm(std::size_t norm_index) {
  return std::get<NormLayer>(layers_.at(norm_positions_.at(norm_index))).params;
}

Head* Model::find_head(std::string_view source) {
  for (Head& h : heads_) {
    if (h.source == source) return &h;
  }
  return nullptr;
}

const Head* Model::find_head(std::string_view source) const {
  return const_cast<Model*>(this)->find_head(source);
}

Head& Model::add_single_head(const std::string& source,
                             std::vector<int> identities, RngStream& rng) {
  if (find_head(source)) throw ConfigError("head '" + source + "' already exists");
  if (identities.empty()) throw ConfigError("head '" + source + "' has no classes");
  std::sort(identities.begin(), identities.end());
  Head h{source, HeadKind::kSingle, std::move(identities), {}};
  h.classifiers.emplace(kAllCameras,
                        make_classifier(feature_dim(), h.identities.size(), rng));
  heads_.push_back(std::move(h));
  return heads_.back();
}

Head& Model::add_per_camera_head(const std::string& source,
                                 const std::map<int, std::size_t>& classes_per_camera,
                                 RngStream& rng) {
  if (find_head(source)) throw ConfigError("head '" + source + "' already exists");
  Head h{source, HeadKind::kPerCamera, {}, {}};
  for (const auto& [camera, classes] : classes_per_camera) {
    if (classes == 0) continue;
    h.classifiers.emplace(camera, make_classifier(feature_dim(), classes, rng));
  }
  if (h.classifiers.empty()) throw ConfigError("head '" + source + "' has no classes");
  heads_.push_back(std::move(h));
  return heads_.back();
}

void Model::remove_head(std::string_view source) {
  std::erase_if(heads_, [&](const Head& h) { return h.source == source; });
}

TrainForward Model::forward_train(const Tensor& x, std::span<const int> cameras,
                                  bool update_running) {
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw DimensionError("model input " + to_string(x.shape()) +
                         " does not match input_dim " + std::to_string(input_dim()));
  }
  TrainForward fwd;
  fwd.caches.resize(layers_.size());
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    LayerCache& cache = fwd.caches[i];
    if (auto* a = std::get_if<AffineLayer>(&layers_[i])) {
      cache.input = h;
      h = affine(h, a->weight, a->bias);
    } else if (std::holds_alternative<ReluLayer>(layers_[i])) {
      cache.input = h;
      h = relu(h);
    } else {
      NormParams& p = std::get<NormLayer>(layers_[i]).params;
      NormOutput out = p.kind == NormKind::kCBN
                           ? cbn_forward_train(h, cameras, p)
                           : bn_forward_train(h, p, update_running);
      cache.norm = std::move(out.cache);
      h = std::move(out.y);
    }
  }
  fwd.features = std::move(h);
  return fwd;
}

GradientMap Model::backward(const TrainForward& fwd, const Tensor& dfeatures) const {
  GradientMap grads;
  Tensor d = dfeatures;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const std::string prefix = "layer" + std::to_string(i);
    const LayerCache& cache = fwd.caches.at(i);
    if (const auto* a = std::get_if<AffineLayer>(&layers_[i])) {
      AffineGrads g = affine_backward(cache.input, a->weight, d);
      grads[prefix + ".weight"] = std::move(g.dw.storage());
      grads[prefix + ".bias"] = std::move(g.db);
      d = std::move(g.dx);
    } else if (std::holds_alternative<ReluLayer>(layers_[i])) {
      d = relu_backward(cache.input, d);
    } else {
      NormGrads g = cbn_backward(cache.norm, d);
      grads[prefix + ".gamma"] = std::move(g.dgamma);
      grads[prefix + ".beta"] = std::move(g.dbeta);
      d = std::move(g.dx);
    }
  }
  return grads;
}

Tensor Model::forward_with(const Tensor& x, const NormFn& normalize) const {
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw DimensionError("model input " + to_string(x.shape()) +
                         " does not match input_dim " + std::to_string(input_dim()));
  }
  Tensor h = x;
  std::size_t norm_index = 0;
  for (const Layer& layer : layers_) {
    if (const auto* a = std::get_if<AffineLayer>(&layer)) {
      h = affine(h, a->weight, a->bias);
    } else if (std::holds_alternative<ReluLayer>(layer)) {
      h = relu(h);
    } else {
      h = normalize(norm_index++, h, std::get<NormLayer>(layer).params);
    }
  }
  return h;
}

std::string Model::head_param_prefix(const Head& head, int classifier_key) {
  return "head[" + head.source + "]." +
         (classifier_key == kAllCameras ? std::string("all")
                                        : "cam" + std::to_string(classifier_key));
}

std::vector<ParamView> Model::backbone_parameters() {
  std::vector<ParamView> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    if (auto* a = std::get_if<AffineLayer>(&layers_[i])) {
      out.push_back({prefix + ".weight", a->weight.values(), true});
      out.push_back({prefix + ".bias", a->bias, false});
    } else if (auto* n = std::get_if<NormLayer>(&layers_[i])) {
      out.push_back({prefix + ".gamma", n->params.gamma, true});
      out.push_back({prefix + ".beta", n->params.beta, true});
    }
  }
  return out;
}

std::vector<ParamView> Model::head_parameters(Head& head) {
  std::vector<ParamView> out;
  for (auto& [key, c] : head.classifiers) {
    const std::string prefix = head_param_prefix(head, key);
    out.push_back({prefix + ".weight", c.weight.values(), true});
    out.push_back({prefix + ".bias", c.bias, false});
  }
  return out;
}

std::vector<ParamView> Model::parameters() {
  std::vector<ParamView> out = backbone_parameters();
  for (Head& h : heads_) {
    auto hp = head_parameters(h);
    out.insert(out.end(), hp.begin(), hp.end());
  }
  return out;
}

Model model_build(const ArchConfig& arch, RngStream& rng) {
  arch.validate();
  std::vector<Layer> layers;
  std::size_t fan_in = arch.input_dim;
  for (std::size_t b = 0; b < arch.widths.size(); ++b) {
    const std::size_t width = arch.widths[b];
    AffineLayer a{gaussian(rng, {fan_in, width}), std::vector<double>(width, 0.0)};
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : a.weight.storage()) v *= stddev;
    layers.emplace_back(std::move(a));
    NormParams p = NormParams::identity(width, arch.norm_kinds[b], arch.eps);
    p.momentum = arch.bn_momentum;
    layers.emplace_back(NormLayer{std::move(p)});
    if (b + 1 < arch.widths.size()) layers.emplace_back(ReluLayer{});
    fan_in = width;
  }
  return Model(arch, std::move(layers));
}

Head& add_head_for(Model& model, const Dataset& ds, bool weak, RngStream& rng) {
  if (!weak) return model.add_single_head(ds.name, ds.identities_in(Split::kTrain), rng);
  std::map<int, std::size_t> classes;
  for (const Sample& s : ds.samples) {
    if (s.split != Split::kTrain) continue;
    if (!s.intra_label) {
      throw LabelError(ds.name + " has train samples without intra labels; "
                       "relabel it for weak supervision");
    }
    std::size_t& n = classes[s.camera];
    n = std::max(n, static_cast<std::size_t>(*s.intra_label) + 1);
  }
  return model.add_per_camera_head(ds.name, classes, rng);
}

}  // namespace camnorm
