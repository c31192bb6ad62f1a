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

#ifndef CAMNORM_LOSS_HPP_
#define CAMNORM_LOSS_HPP_

#include <cstddef>
#include <span>

#include "camnorm/tensor.hpp"

namespace camnorm {

struct LossOutput {
  double loss = 0.0;
  Tensor dlogits;
};

// Mean softmax cross-entropy over the batch; dlogits = (softmax - onehot) / B.
LossOutput cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

}  // namespace camnorm

#endif  // CAMNORM_LOSS_HPP_
