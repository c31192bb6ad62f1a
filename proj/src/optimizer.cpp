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

#include "camnorm/optimizer.hpp"

#include "camnorm/error.hpp"

namespace camnorm {

void Sgd::step(std::span<const ParamView> params, const GradientMap& grads, double lr) {
  for (const ParamView& p : params) {
    const auto it = grads.find(p.name);
    if (it == grads.end()) continue;
    const std::vector<double>& g = it->second;
    if (g.size() != p.values.size()) {
      throw DimensionError("gradient for " + p.name + " has " +
                           std::to_string(g.size()) + " entries, parameter has " +
                           std::to_string(p.values.size()));
    }
    std::vector<double>& v = velocity_[p.name];
    if (v.empty()) v.assign(g.size(), 0.0);
    const double wd = p.decay ? options_.weight_decay : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      v[i] = options_.momentum * v[i] + (g[i] + wd * p.values[i]);
      p.values[i] -= lr * v[i];
    }
  }
}

}  // namespace camnorm
