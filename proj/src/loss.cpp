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

#include "camnorm/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "camnorm/error.hpp"

namespace camnorm {

LossOutput cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.rows() != labels.size()) {
    throw DimensionError("cross_entropy: logits " + to_string(logits.shape()) +
                         " for " + std::to_string(labels.size()) + " labels");
  }
  if (logits.rows() == 0) throw EmptyGroupError("cross_entropy on an empty batch");
  const std::size_t b = logits.rows(), c = logits.cols();
  const double inv_b = 1.0 / static_cast<double>(b);
  LossOutput out{0.0, Tensor(logits.shape())};
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw LabelError("label " + std::to_string(labels[i]) + " out of range for " +
                       std::to_string(c) + " classes");
    }
    const auto row = logits.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    const double log_z = std::log(z) + peak;
    out.loss += (log_z - row[labels[i]]) * inv_b;
    auto grad = out.dlogits.row(i);
    for (std::size_t j = 0; j < c; ++j) grad[j] = std::exp(row[j] - log_z) * inv_b;
    grad[labels[i]] -= inv_b;
  }
  if (!std::isfinite(out.loss)) throw NumericError("cross-entropy loss");
  return out;
}

}  // namespace camnorm
