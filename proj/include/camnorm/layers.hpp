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

#ifndef CAMNORM_LAYERS_HPP_
#define CAMNORM_LAYERS_HPP_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "camnorm/tensor.hpp"

namespace camnorm {

enum class NormKind { kBN, kCBN };

std::string_view to_string(NormKind kind);
NormKind parse_norm_kind(std::string_view text);

struct NormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  double eps = 1e-5;
  NormKind kind = NormKind::kCBN;
  // Exponential moving averages, maintained by bn_forward_train only.
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;

  // gamma = 1, beta = 0, running stats (0, 1).
  static NormParams identity(std::size_t width, NormKind kind, double eps = 1e-5);
  std::size_t width() const { return gamma.size(); }
  void validate() const;
};

struct NormGroup {
  int camera = 0;
  std::vector<std::size_t> rows;
  std::vector<double> mean;
  std::vector<double> var;
  std::vector<double> inv_std;
};

struct NormCache {
  Tensor normalized;  // (x - mu) / sqrt(var + eps), before gamma/beta
  std::vector<NormGroup> groups;
  std::vector<double> gamma;
};

struct NormOutput {
  Tensor y;
  NormCache cache;
};

struct NormGrads {
  Tensor dx;
  std::vector<double> dgamma;
  std::vector<double> dbeta;
};

// Standardizes each camera group with its own mean and population variance.
// Every camera must occur at least twice.
NormOutput cbn_forward_train(const Tensor& x, std::span<const int> cameras,
                             const NormParams& p);

// Batch-norm backward applied per cached group with that group's size.
NormGrads cbn_backward(const NormCache& cache, const Tensor& dy);

// Single-group standardization over the whole batch. Updates the running
// statistics (momentum-weighted, population variance) when requested.
NormOutput bn_forward_train(const Tensor& x, NormParams& p,
                            bool update_running = true);
NormGrads bn_backward(const NormCache& cache, const Tensor& dy);

// y = gamma * (x - mean) / sqrt(var + eps) + beta with fixed statistics.
Tensor norm_forward_eval(const Tensor& x, std::span<const double> mean,
                         std::span<const double> var, const NormParams& p);

struct AffineGrads {
  Tensor dx;
  Tensor dw;
  std::vector<double> db;
};

AffineGrads affine_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

}  // namespace camnorm

#endif  // CAMNORM_LAYERS_HPP_
