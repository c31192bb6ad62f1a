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

#include "camnorm/layers.hpp"

#include <cmath>
#include <map>
#include <string>

#include "camnorm/error.hpp"

namespace camnorm {
namespace {

void check_width(const Tensor& x, const NormParams& p) {
  if (x.rank() != 2 || x.cols() != p.width()) {
    throw DimensionError("norm input " + to_string(x.shape()) +
                         " does not match layer width " +
                         std::to_string(p.width()));
  }
}

// Normalizes the rows of one group in place and records its statistics.
NormGroup standardize_group(const Tensor& x, int camera,
                            std::vector<std::size_t> rows, const NormParams& p,
                            Tensor& normalized, Tensor& y) {
  NormGroup g;
  g.camera = camera;
  Moments m = reduce_moments(x, rows);
  g.mean = std::move(m.mean);
  g.var = std::move(m.var);
  g.inv_std.resize(g.var.size());
  for (std::size_t j = 0; j < g.var.size(); ++j) {
    g.inv_std[j] = 1.0 / std::sqrt(g.var[j] + p.eps);
  }
  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double xt = (x.at(r, j) - g.mean[j]) * g.inv_std[j];
      normalized.at(r, j) = xt;
      y.at(r, j) = p.gamma[j] * xt + p.beta[j];
    }
  }
  g.rows = std::move(rows);
  return g;
}

}  // namespace

std::string_view to_string(NormKind kind) {
  return kind == NormKind::kBN ? "bn" : "cbn";
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "bn" || text == "BN") return NormKind::kBN;
  if (text == "cbn" || text == "CBN") return NormKind::kCBN;
  throw ConfigError("unknown norm kind '" + std::string(text) + "'");
}

NormParams NormParams::identity(std::size_t width, NormKind kind, double eps) {
  NormParams p;
  p.gamma.assign(width, 1.0);
  p.beta.assign(width, 0.0);
  p.eps = eps;
  p.kind = kind;
  p.running_mean.assign(width, 0.0);
  p.running_var.assign(width, 1.0);
  return p;
}

void NormParams::validate() const {
  if (!(eps > 0.0)) throw ConfigError("norm eps must be positive");
  if (beta.size() != gamma.size() || running_mean.size() != gamma.size() ||
      running_var.size() != gamma.size()) {
    throw DimensionError("norm parameter lengths disagree with width " +
                         std::to_string(gamma.size()));
  }
}

NormOutput cbn_forward_train(const Tensor& x, std::span<const int> cameras,
                             const NormParams& p) {
  check_width(x, p);
  if (cameras.size() != x.rows()) {
    throw DimensionError("camera list has " + std::to_string(cameras.size()) +
                         " entries for " + std::to_string(x.rows()) + " rows");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cameras.size(); ++i) groups[cameras[i]].push_back(i);
  for (const auto& [camera, rows] : groups) {
    if (rows.size() < 2) {
      throw ContractViolation("camera " + std::to_string(camera) +
                              " has a single sample in the batch; CBN needs "
                              "at least two per camera");
    }
  }
  NormOutput out{Tensor(x.shape()), {Tensor(x.shape()), {}, p.gamma}};
  for (auto& [camera, rows] : groups) {
    out.cache.groups.push_back(
        standardize_group(x, camera, std::move(rows), p, out.cache.normalized, out.y));
  }
  return out;
}

NormGrads cbn_backward(const NormCache& cache, const Tensor& dy) {
  const Tensor& xt = cache.normalized;
  if (dy.shape() != xt.shape()) {
    throw DimensionError("norm backward: dy " + to_string(dy.shape()) +
                         " vs cached " + to_string(xt.shape()));
  }
  const std::size_t d = xt.cols();
  NormGrads g{Tensor(xt.shape()), std::vector<double>(d, 0.0),
              std::vector<double>(d, 0.0)};
  std::vector<double> sum_dxt(d), sum_dxt_xt(d);
  for (const NormGroup& group : cache.groups) {
    const double m = static_cast<double>(group.rows.size());
    std::fill(sum_dxt.begin(), sum_dxt.end(), 0.0);
    std::fill(sum_dxt_xt.begin(), sum_dxt_xt.end(), 0.0);
    for (std::size_t r : group.rows) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dxt = dy.at(r, j) * cache.gamma[j];
        sum_dxt[j] += dxt;
        sum_dxt_xt[j] += dxt * xt.at(r, j);
        g.dgamma[j] += dy.at(r, j) * xt.at(r, j);
        g.dbeta[j] += dy.at(r, j);
      }
    }
    for (std::size_t r : group.rows) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dxt = dy.at(r, j) * cache.gamma[j];
        g.dx.at(r, j) = group.inv_std[j] / m *
                        (m * dxt - sum_dxt[j] - xt.at(r, j) * sum_dxt_xt[j]);
      }
    }
  }
  if (!g.dx.all_finite()) throw NumericError("norm backward dx");
  return g;
}

NormOutput bn_forward_train(const Tensor& x, NormParams& p, bool update_running) {
  check_width(x, p);
  if (x.rows() < 2) {
    throw ContractViolation("BN training needs a batch of at least two, got " +
                            std::to_string(x.rows()));
  }
  std::vector<std::size_t> rows(x.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  NormOutput out{Tensor(x.shape()), {Tensor(x.shape()), {}, p.gamma}};
  out.cache.groups.push_back(
      standardize_group(x, 0, std::move(rows), p, out.cache.normalized, out.y));
  if (update_running) {
    const NormGroup& g = out.cache.groups.front();
    for (std::size_t j = 0; j < p.width(); ++j) {
      p.running_mean[j] = (1.0 - p.momentum) * p.running_mean[j] + p.momentum * g.mean[j];
      p.running_var[j] = (1.0 - p.momentum) * p.running_var[j] + p.momentum * g.var[j];
    }
  }
  return out;
}

NormGrads bn_backward(const NormCache& cache, const Tensor& dy) {
  return cbn_backward(cache, dy);
}

Tensor norm_forward_eval(const Tensor& x, std::span<const double> mean,
                         std::span<const double> var, const NormParams& p) {
  check_width(x, p);
  if (mean.size() != p.width() || var.size() != p.width()) {
    throw DimensionError("eval statistics length does not match width " +
                         std::to_string(p.width()));
  }
  Tensor y(x.shape());
  for (std::size_t j = 0; j < p.width(); ++j) {
    const double scale = p.gamma[j] / std::sqrt(var[j] + p.eps);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      y.at(r, j) = scale * (x.at(r, j) - mean[j]) + p.beta[j];
    }
  }
  return y;
}

AffineGrads affine_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  if (dy.rank() != 2 || dy.rows() != x.rows() || dy.cols() != w.cols()) {
    throw DimensionError("affine backward: dy " + to_string(dy.shape()) +
                         " for x " + to_string(x.shape()) + ", W " +
                         to_string(w.shape()));
  }
  AffineGrads g{matmul_nt(dy, w), matmul_tn(x, dy),
                std::vector<double>(w.cols(), 0.0)};
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    for (std::size_t j = 0; j < dy.cols(); ++j) g.db[j] += dy.at(r, j);
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.storage()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  if (x.shape() != dy.shape()) {
    throw DimensionError("relu backward: x " + to_string(x.shape()) + " vs dy " +
                         to_string(dy.shape()));
  }
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

}  // namespace camnorm
