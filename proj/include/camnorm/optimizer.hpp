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

#ifndef CAMNORM_OPTIMIZER_HPP_
#define CAMNORM_OPTIMIZER_HPP_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "camnorm/model.hpp"

namespace camnorm {

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// SGD with heavy-ball momentum:
//   v <- m * v + (g + wd * p)   (wd only where ParamView::decay is set)
//   p <- p - lr * v
// Parameters without an entry in the gradient map are left untouched,
// velocity included.
class Sgd {
 public:
  explicit Sgd(SgdOptions options = {}) : options_(options) {}

  void step(std::span<const ParamView> params, const GradientMap& grads, double lr);
  void reset() { velocity_.clear(); }
  const SgdOptions& options() const { return options_; }

 private:
  SgdOptions options_;
  std::map<std::string, std::vector<double>> velocity_;
};

}  // namespace camnorm

#endif  // CAMNORM_OPTIMIZER_HPP_
