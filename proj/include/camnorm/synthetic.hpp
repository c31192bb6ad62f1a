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

#ifndef CAMNORM_SYNTHETIC_HPP_
#define CAMNORM_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camnorm/dataset.hpp"
#include "camnorm/rng.hpp"
#include "json.hpp"

namespace camnorm {

// Diagonal affine distortion a camera applies to identity prototypes.
struct CameraParams {
  int id = 0;
  std::vector<double> scale;
  std::vector<double> offset;

  friend bool operator==(const CameraParams&, const CameraParams&) = default;
};

// Multi-camera generator settings. An image of identity k under camera c is
//   x = s_c * z_k + b_c + noise * eps,   z_k ~ N(0, I), eps ~ N(0, I).
// Dimensions outside [informative_begin, informative_end) draw a fresh z
// component per image, so they carry camera shift but no identity signal.
struct SynthConfig {
  std::string name = "synthetic";
  std::size_t dim = 32;
  std::size_t train_identities = 200;
  std::size_t eval_identities = 100;
  std::vector<int> train_cameras{0, 1, 2, 3};
  std::vector<int> eval_cameras{0, 1, 2, 3};
  std::size_t train_images_per_camera = 8;
  std::size_t query_images_per_camera = 1;
  std::size_t gallery_images_per_camera = 7;
  double scale_min = 0.5;
  double scale_max = 2.0;
  double offset_min = -2.0;
  double offset_max = 2.0;
  double noise = 0.5;
  std::optional<std::size_t> informative_begin;
  std::optional<std::size_t> informative_end;
  // Probability that a train identity is missing from a train camera; every
  // identity keeps at least two cameras (or all of them if fewer exist).
  double camera_dropout = 0.0;
  int identity_base = 0;
  std::uint64_t seed = 1;
  // Fixed camera parameters that replace the random draw for matching ids.
  std::vector<CameraParams> camera_overrides;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Named desk-scale presets: "default", "direct-transfer", "incremental-a",
// "incremental-b".
SynthConfig synth_preset(const std::string& name, std::uint64_t seed);
std::vector<std::string> synth_preset_names();

// Parameters for every camera the config mentions, in ascending id order.
// Each camera id gets its own derived stream, so parameters never repeat
// across ids.
std::vector<CameraParams> draw_camera_params(const SynthConfig& cfg);

// One image of `prototype` seen through `camera`.
std::vector<double> render_image(std::span<const double> prototype,
                                 const CameraParams& camera, double noise,
                                 RngStream& rng);

Dataset generate_synthetic(const SynthConfig& cfg);

}  // namespace camnorm

#endif  // CAMNORM_SYNTHETIC_HPP_
