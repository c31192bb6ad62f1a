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

#ifndef CAMNORM_CHECKPOINT_HPP_
#define CAMNORM_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>

#include "camnorm/model.hpp"

namespace camnorm {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  std::string config_hash;
};

// File layout:
//   line 1   : compact JSON header terminated by '\n'
//              {"format":"camnorm-checkpoint","version":1,"arch":{...},
//               "heads":[{"source","kind","identities","classifiers":
//                 [{"camera","classes"}]}],
//               "seed","epoch","config_hash",
//               "payload":{"dtype":"float64-le","count":N,
//                          "layout":[{"name","shape"}]}}
//   remainder: N little-endian IEEE-754 doubles in layout order.
// Layout order is the layer order (affine weight, bias; norm gamma, beta,
// running_mean, running_var), then heads in order with classifiers by
// ascending camera key (weight, bias).
void save_checkpoint(const Model& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace camnorm

#endif  // CAMNORM_CHECKPOINT_HPP_
