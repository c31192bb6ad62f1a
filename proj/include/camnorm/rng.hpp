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

#ifndef CAMNORM_RNG_HPP_
#define CAMNORM_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "camnorm/tensor.hpp"

namespace camnorm {

// Counter-based generator: the i-th 64-bit output is the SplitMix64
// finalizer applied to seed + i * golden_gamma. Every draw below is defined
// in terms of next_u64() with fixed arithmetic, so a seed and call sequence
// pin the output on every platform (up to libm rounding in gaussian()).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n); n must be positive.
  std::size_t index(std::size_t n);
  // Standard normal via Box-Muller; the paired value is cached.
  double gaussian();

  // Independent stream keyed by `key`; does not advance this stream.
  RngStream derive(std::uint64_t key) const;

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Tensor of i.i.d. standard normal entries.
Tensor gaussian(RngStream& rng, const Shape& shape);

}  // namespace camnorm

#endif  // CAMNORM_RNG_HPP_
