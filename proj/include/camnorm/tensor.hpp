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

#ifndef CAMNORM_TENSOR_HPP_
#define CAMNORM_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace camnorm {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

// Dense row-major float64 array. Most of the library works on rank-2
// tensors laid out as [rows, cols].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  // Builds a rank-2 tensor from nested rows; all rows must have equal length.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Rows of `x` selected by `indices`, in order.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

// out[i,j] = sum_k x[i,k] * w[k,j] + b[j]
Tensor affine(const Tensor& x, const Tensor& w, std::span<const double> b);

// x^T * y for x [n,a], y [n,b] -> [a,b].
Tensor matmul_tn(const Tensor& x, const Tensor& y);
// x * w^T for x [n,b], w [a,b] -> [n,a].
Tensor matmul_nt(const Tensor& x, const Tensor& w);

struct Moments {
  std::vector<double> mean;
  std::vector<double> var;
};

// Column-wise mean and population (1/M) variance.
Moments reduce_moments(const Tensor& x);
Moments reduce_moments(const Tensor& x, std::span<const std::size_t> rows);

double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace camnorm

#endif  // CAMNORM_TENSOR_HPP_
