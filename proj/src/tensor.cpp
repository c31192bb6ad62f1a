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

#include "camnorm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "camnorm/error.hpp"

namespace camnorm {
namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

void require_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " must be rank 2, got " +
                         to_string(t.shape()));
  }
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + to_string(shape_));
  }
}

Tensor Tensor::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t d = n ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n * d);
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("ragged rows in from_rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({n, d}, std::move(data));
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const { return rank() >= 1 ? shape_[0] : 0; }
std::size_t Tensor::cols() const { return rank() >= 2 ? shape_[1] : 1; }

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  require_rank2(x, "gather_rows input");
  Tensor out({indices.size(), x.cols()});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.rows()) {
      throw DimensionError("row index " + std::to_string(indices[i]) +
                           " out of range for " + to_string(x.shape()));
    }
    std::copy_n(x.row(indices[i]).begin(), x.cols(), out.row(i).begin());
  }
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, std::span<const double> b) {
  require_rank2(x, "affine input");
  require_rank2(w, "affine weight");
  if (x.cols() != w.rows() || b.size() != w.cols()) {
    throw DimensionError("affine shapes do not conform: x " +
                         to_string(x.shape()) + ", W " + to_string(w.shape()) +
                         ", b [" + std::to_string(b.size()) + "]");
  }
  const std::size_t n = x.rows(), k_dim = x.cols(), m = w.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.row(i).data();
    std::copy(b.begin(), b.end(), o);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double xv = x.at(i, k);
      const double* wr = w.row(k).data();
      for (std::size_t j = 0; j < m; ++j) o[j] += xv * wr[j];
    }
  }
  if (!out.all_finite()) throw NumericError("affine output");
  return out;
}

Tensor matmul_tn(const Tensor& x, const Tensor& y) {
  require_rank2(x, "matmul_tn lhs");
  require_rank2(y, "matmul_tn rhs");
  if (x.rows() != y.rows()) {
    throw DimensionError("matmul_tn row mismatch: " + to_string(x.shape()) +
                         " vs " + to_string(y.shape()));
  }
  const std::size_t a = x.cols(), b = y.cols();
  Tensor out({a, b});
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const double* yr = y.row(n).data();
    for (std::size_t i = 0; i < a; ++i) {
      const double xv = x.at(n, i);
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < b; ++j) o[j] += xv * yr[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& x, const Tensor& w) {
  require_rank2(x, "matmul_nt lhs");
  require_rank2(w, "matmul_nt rhs");
  if (x.cols() != w.cols()) {
    throw DimensionError("matmul_nt column mismatch: " + to_string(x.shape()) +
                         " vs " + to_string(w.shape()));
  }
  const std::size_t n = x.rows(), a = w.rows(), b = x.cols();
  Tensor out({n, a});
  for (std::size_t i = 0; i < n; ++i) {
    const double* xr = x.row(i).data();
    for (std::size_t k = 0; k < a; ++k) {
      const double* wr = w.row(k).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < b; ++j) acc += xr[j] * wr[j];
      out.at(i, k) = acc;
    }
  }
  return out;
}

Moments reduce_moments(const Tensor& x, std::span<const std::size_t> rows) {
  require_rank2(x, "reduce_moments input");
  if (rows.empty()) {
    throw EmptyGroupError("reduce_moments needs at least one row");
  }
  const std::size_t d = x.cols();
  const double inv_m = 1.0 / static_cast<double>(rows.size());
  Moments m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += xr[j];
  }
  for (double& v : m.mean) v *= inv_m;
  // Two-pass variance keeps the centred sum accurate for offset-heavy inputs.
  for (std::size_t r : rows) {
    const auto xr = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - m.mean[j];
      m.var[j] += c * c;
    }
  }
  for (double& v : m.var) v *= inv_m;
  return m;
}

Moments reduce_moments(const Tensor& x) {
  require_rank2(x, "reduce_moments input");
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return reduce_moments(x, rows);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("max_abs_diff length mismatch: " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace camnorm
