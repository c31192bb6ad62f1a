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

#include "camnorm/synthetic.hpp"

#include <algorithm>
#include <set>

#include "camnorm/error.hpp"

namespace camnorm {
using nlohmann::json;

namespace {

constexpr std::uint64_t kCameraStream = 0x63616d0000000000ULL;
constexpr std::uint64_t kPrototypeStream = 1;
constexpr std::uint64_t kImageStream = 2;
constexpr std::uint64_t kCoverageStream = 3;

std::vector<double> draw_prototype(std::size_t dim, RngStream& rng) {
  std::vector<double> z(dim);
  for (double& v : z) v = rng.gaussian();
  return z;
}

}  // namespace

void SynthConfig::validate() const {
  if (dim == 0) throw ConfigError("synth.dim must be positive");
  if (train_identities == 0 || eval_identities == 0) {
    throw ConfigError("synth identity counts must be positive");
  }
  if (train_cameras.empty() || eval_cameras.empty()) {
    throw ConfigError("synth camera lists must be nonempty");
  }
  if (train_images_per_camera == 0 || query_images_per_camera == 0 ||
      gallery_images_per_camera == 0) {
    throw ConfigError("synth images-per-camera counts must be positive");
  }
  if (!(scale_min <= scale_max) || (scale_min <= 0.0 && scale_max >= 0.0)) {
    throw ConfigError("synth scale range must be ordered and exclude zero");
  }
  if (!(offset_min <= offset_max)) {
    throw ConfigError("synth offset range must be ordered");
  }
  if (!(noise >= 0.0)) throw ConfigError("synth.noise must be non-negative");
  if (!(camera_dropout >= 0.0 && camera_dropout < 1.0)) {
    throw ConfigError("synth.camera_dropout must lie in [0, 1)");
  }
  const std::size_t lo = informative_begin.value_or(0);
  const std::size_t hi = informative_end.value_or(dim);
  if (lo >= hi || hi > dim) {
    throw ConfigError("synth informative range must be a nonempty subrange of [0, dim)");
  }
  if (std::set<int>(train_cameras.begin(), train_cameras.end()).size() !=
      train_cameras.size()) {
    throw ConfigError("synth.train_cameras has duplicates");
  }
  for (const CameraParams& cp : camera_overrides) {
    if (cp.scale.size() != dim || cp.offset.size() != dim) {
      throw ConfigError("camera override " + std::to_string(cp.id) +
                        " must have dim-length scale and offset");
    }
  }
}

json SynthConfig::to_json() const {
  json j = {{"name", name},
            {"dim", dim},
            {"train_identities", train_identities},
            {"eval_identities", eval_identities},
            {"train_cameras", train_cameras},
            {"eval_cameras", eval_cameras},
            {"train_images_per_camera", train_images_per_camera},
            {"query_images_per_camera", query_images_per_camera},
            {"gallery_images_per_camera", gallery_images_per_camera},
            {"scale_min", scale_min},
            {"scale_max", scale_max},
            {"offset_min", offset_min},
            {"offset_max", offset_max},
            {"noise", noise},
            {"camera_dropout", camera_dropout},
            {"identity_base", identity_base},
            {"seed", seed}};
  if (informative_begin) j["informative_begin"] = *informative_begin;
  if (informative_end) j["informative_end"] = *informative_end;
  if (!camera_overrides.empty()) {
    json arr = json::array();
    for (const auto& cp : camera_overrides) {
      arr.push_back({{"id", cp.id}, {"scale", cp.scale}, {"offset", cp.offset}});
    }
    j["camera_overrides"] = arr;
  }
  return j;
}

SynthConfig SynthConfig::from_json(const json& j) {
  static const std::set<std::string> kKeys = {
      "name", "dim", "train_identities", "eval_identities", "train_cameras",
      "eval_cameras", "train_images_per_camera", "query_images_per_camera",
      "gallery_images_per_camera", "scale_min", "scale_max", "offset_min",
      "offset_max", "noise", "camera_dropout", "identity_base", "seed",
      "informative_begin", "informative_end", "camera_overrides"};
  if (!j.is_object()) throw ConfigError("synth config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw ConfigError("unknown synth key '" + key + "'");
  }
  SynthConfig c;
  try {
    c.name = j.value("name", c.name);
    c.dim = j.value("dim", c.dim);
    c.train_identities = j.value("train_identities", c.train_identities);
    c.eval_identities = j.value("eval_identities", c.eval_identities);
    c.train_cameras = j.value("train_cameras", c.train_cameras);
    c.eval_cameras = j.value("eval_cameras", c.eval_cameras);
    c.train_images_per_camera =
        j.value("train_images_per_camera", c.train_images_per_camera);
    c.query_images_per_camera =
        j.value("query_images_per_camera", c.query_images_per_camera);
    c.gallery_images_per_camera =
        j.value("gallery_images_per_camera", c.gallery_images_per_camera);
    c.scale_min = j.value("scale_min", c.scale_min);
    c.scale_max = j.value("scale_max", c.scale_max);
    c.offset_min = j.value("offset_min", c.offset_min);
    c.offset_max = j.value("offset_max", c.offset_max);
    c.noise = j.value("noise", c.noise);
    c.camera_dropout = j.value("camera_dropout", c.camera_dropout);
    c.identity_base = j.value("identity_base", c.identity_base);
    c.seed = j.value("seed", c.seed);
    if (j.contains("informative_begin")) {
      c.informative_begin = j.at("informative_begin").get<std::size_t>();
    }
    if (j.contains("informative_end")) {
      c.informative_end = j.at("informative_end").get<std::size_t>();
    }
    if (j.contains("camera_overrides")) {
      for (const auto& o : j.at("camera_overrides")) {
        c.camera_overrides.push_back(
            {o.at("id").get<int>(), o.at("scale").get<std::vector<double>>(),
             o.at("offset").get<std::vector<double>>()});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::string> synth_preset_names() {
  return {"default", "direct-transfer", "incremental-a", "incremental-b"};
}

SynthConfig synth_preset(const std::string& name, std::uint64_t seed) {
  SynthConfig c;
  c.seed = seed;
  c.name = name;
  if (name == "default") {
    // 32 eval images per identity and camera give every camera 3200
    // unlabeled images, enough for 50 estimation batches of 64.
    c.gallery_images_per_camera = 31;
  } else if (name == "direct-transfer") {
    c.eval_cameras = {4, 5, 6, 7};
  } else if (name == "incremental-a") {
    c.informative_begin = 0;
    c.informative_end = 20;
  } else if (name == "incremental-b") {
    c.train_cameras = {4, 5, 6, 7};
    c.eval_cameras = {4, 5, 6, 7};
    c.informative_begin = 12;
    c.informative_end = 32;
    c.identity_base = 100000;
    c.seed = seed + 7919;
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  c.validate();
  return c;
}

std::vector<CameraParams> draw_camera_params(const SynthConfig& cfg) {
  std::set<int> ids(cfg.train_cameras.begin(), cfg.train_cameras.end());
  ids.insert(cfg.eval_cameras.begin(), cfg.eval_cameras.end());
  const RngStream root(cfg.seed);
  std::vector<CameraParams> out;
  for (int id : ids) {
    auto it = std::find_if(cfg.camera_overrides.begin(), cfg.camera_overrides.end(),
                           [id](const CameraParams& p) { return p.id == id; });
    if (it != cfg.camera_overrides.end()) {
      out.push_back(*it);
      continue;
    }
    RngStream rng = root.derive(kCameraStream + static_cast<std::uint32_t>(id));
    CameraParams p{id, std::vector<double>(cfg.dim), std::vector<double>(cfg.dim)};
    for (double& s : p.scale) s = rng.uniform(cfg.scale_min, cfg.scale_max);
    for (double& b : p.offset) b = rng.uniform(cfg.offset_min, cfg.offset_max);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> render_image(std::span<const double> prototype,
                                 const CameraParams& camera, double noise,
                                 RngStream& rng) {
  std::vector<double> x(prototype.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    x[d] = camera.scale[d] * prototype[d] + camera.offset[d];
    if (noise > 0.0) x[d] += noise * rng.gaussian();
  }
  return x;
}

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto params = draw_camera_params(cfg);
  auto camera = [&](int id) -> const CameraParams& {
    return *std::find_if(params.begin(), params.end(),
                         [id](const CameraParams& p) { return p.id == id; });
  };
  const std::size_t info_lo = cfg.informative_begin.value_or(0);
  const std::size_t info_hi = cfg.informative_end.value_or(cfg.dim);

  const RngStream root(cfg.seed);
  RngStream proto_rng = root.derive(kPrototypeStream);
  RngStream image_rng = root.derive(kImageStream);
  RngStream coverage_rng = root.derive(kCoverageStream);

  Dataset ds;
  ds.name = cfg.name;
  ds.dim = cfg.dim;
  ds.cameras.insert(cfg.train_cameras.begin(), cfg.train_cameras.end());
  ds.cameras.insert(cfg.eval_cameras.begin(), cfg.eval_cameras.end());

  auto emit = [&](int identity, const std::vector<double>& z, int cam,
                  std::size_t count, Split split) {
    std::vector<double> proto = z;
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t d = 0; d < cfg.dim; ++d) {
        if (d < info_lo || d >= info_hi) proto[d] = image_rng.gaussian();
      }
      ds.samples.push_back(
          {render_image(proto, camera(cam), cfg.noise, image_rng), identity,
           cam, std::nullopt, split});
    }
  };

  for (std::size_t k = 0; k < cfg.train_identities; ++k) {
    const int identity = cfg.identity_base + static_cast<int>(k);
    const auto z = draw_prototype(cfg.dim, proto_rng);
    std::vector<int> cams = cfg.train_cameras;
    if (cfg.camera_dropout > 0.0) {
      std::vector<int> kept;
      for (int c : cams) {
        if (coverage_rng.uniform() >= cfg.camera_dropout) kept.push_back(c);
      }
      const std::size_t min_cams = std::min<std::size_t>(2, cams.size());
      while (kept.size() < min_cams) {
        const int c = cams[coverage_rng.index(cams.size())];
        if (std::find(kept.begin(), kept.end(), c) == kept.end()) kept.push_back(c);
      }
      std::sort(kept.begin(), kept.end());
      cams = kept;
    }
    ds.identities.insert(identity);
    for (int c : cams) emit(identity, z, c, cfg.train_images_per_camera, Split::kTrain);
  }
  for (std::size_t k = 0; k < cfg.eval_identities; ++k) {
    const int identity = cfg.identity_base +
                         static_cast<int>(cfg.train_identities + k);
    const auto z = draw_prototype(cfg.dim, proto_rng);
    ds.identities.insert(identity);
    for (int c : cfg.eval_cameras) {
      emit(identity, z, c, cfg.query_images_per_camera, Split::kQuery);
      emit(identity, z, c, cfg.gallery_images_per_camera, Split::kGallery);
    }
  }

  json cams = json::array();
  for (const auto& p : params) {
    cams.push_back({{"id", p.id}, {"scale", p.scale}, {"offset", p.offset}});
  }
  ds.generator_params = {{"config", cfg.to_json()}, {"cameras", cams}};
  return ds;
}

}  // namespace camnorm
