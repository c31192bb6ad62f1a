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

#include <cmath>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "camnorm/error.hpp"
#include "camnorm/parallel.hpp"
#include "camnorm/rng.hpp"
#include "camnorm/tensor.hpp"
#include "test_util.hpp"

namespace camnorm {
namespace {

TEST(Affine, IdentityWeight) {
  const Tensor x = Tensor::from_rows({{1, 2}});
  const Tensor w = Tensor::from_rows({{1, 0}, {0, 1}});
  EXPECT_EQ(affine(x, w, std::vector<double>{0, 0}), Tensor::from_rows({{1, 2}}));
}

TEST(Affine, HandArithmetic) {
  const Tensor out =
      affine(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{1}, {1}}), std::vector<double>{3});
  EXPECT_EQ(out, Tensor::from_rows({{6}}));
}

TEST(Affine, ZeroInputReturnsBias) {
  RngStream rng(3);
  const Tensor w = gaussian(rng, {2, 2});
  EXPECT_EQ(affine(Tensor::from_rows({{0, 0}}), w, std::vector<double>{5, 7}), Tensor::from_rows({{5, 7}}));
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
  const Tensor x({2, 3});
  const Tensor w({2, 4});
  try {
    affine(x, w, std::vector<double>(4));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2,3]"), std::string::npos) << what;
    EXPECT_NE(what.find("[2,4]"), std::string::npos) << what;
  }
  EXPECT_THROW(affine(Tensor({1, 2}), Tensor({2, 2}), std::vector<double>(3)), DimensionError);
}

TEST(Affine, LinearityWithoutBias) {
  RngStream rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = gaussian(rng, {5, 4});
    const Tensor w = gaussian(rng, {4, 3});
    const std::vector<double> zero(3, 0.0);
    const double alpha = rng.uniform(-3.0, 3.0);
    Tensor scaled = x;
    for (double& v : scaled.storage()) v *= alpha;
    Tensor expect = affine(x, w, zero);
    for (double& v : expect.storage()) v *= alpha;
    EXPECT_LE(max_abs_diff(affine(scaled, w, zero).values(), expect.values()), 1e-12);
  }
}

TEST(Affine, MatchesNaiveLoop) {
  RngStream rng(5);
  const Tensor x = gaussian(rng, {4, 3});
  const Tensor w = gaussian(rng, {3, 2});
  const std::vector<double> b{0.5, -1.0};
  const Tensor out = affine(x, w, b);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double s = b[j];
      for (std::size_t k = 0; k < 3; ++k) s += x.at(i, k) * w.at(k, j);
      EXPECT_DOUBLE_EQ(out.at(i, j), s);
    }
  }
}

TEST(ReduceMoments, TwoRows) {
  const Moments m = reduce_moments(Tensor::from_rows({{0}, {2}}));
  EXPECT_EQ(m.mean, std::vector<double>{1});
  EXPECT_EQ(m.var, std::vector<double>{1});
}

TEST(ReduceMoments, ConstantColumn) {
  const double c = 3.25;
  const Moments m = reduce_moments(Tensor::from_rows({{c}, {c}, {c}}));
  EXPECT_EQ(m.mean, std::vector<double>{c});
  EXPECT_EQ(m.var, std::vector<double>{0});
}

TEST(ReduceMoments, TwoColumns) {
  const Moments m = reduce_moments(Tensor::from_rows({{0, 2}, {4, 6}}));
  EXPECT_EQ(m.mean, (std::vector<double>{2, 4}));
  EXPECT_EQ(m.var, (std::vector<double>{4, 4}));
}

TEST(ReduceMoments, EmptyInputThrows) {
  EXPECT_THROW(reduce_moments(Tensor({0, 3})), EmptyGroupError);
}

TEST(ReduceMoments, CenteredMeanIsZero) {
  RngStream rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.index(40);
    Tensor x = gaussian(rng, {m, 6});
    for (double& v : x.storage()) v = 100.0 * v + 7.0;
    const Moments mom = reduce_moments(x);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t d = 0; d < 6; ++d) x.at(r, d) -= mom.mean[d];
    }
    for (double v : reduce_moments(x).mean) EXPECT_LE(std::abs(v), 1e-12);
    for (double v : mom.var) EXPECT_GE(v, 0.0);
  }
}

TEST(ReduceMoments, RowSubset) {
  const Tensor x = Tensor::from_rows({{0}, {100}, {2}});
  const std::vector<std::size_t> rows{0, 2};
  const Moments m = reduce_moments(x, rows);
  EXPECT_EQ(m.mean, std::vector<double>{1});
  EXPECT_EQ(m.var, std::vector<double>{1});
}

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), DimensionError);
  EXPECT_THROW(Tensor::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST(Tensor, NonFiniteAffineOutputThrows) {
  const Tensor x = Tensor::from_rows({{1e308, 1e308}});
  const Tensor w = Tensor::from_rows({{10}, {10}});
  EXPECT_THROW(affine(x, w, std::vector<double>{0}), NumericError);
}

TEST(Rng, SplitMix64ReferenceSequence) {
  // Seed 0 is the published SplitMix64 reference sequence.
  RngStream zero(0);
  EXPECT_EQ(zero.next_u64(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(zero.next_u64(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(zero.next_u64(), 0x06c45d188009454fULL);
  RngStream s42(42);
  EXPECT_EQ(s42.next_u64(), 0xbdd732262feb6e95ULL);
  EXPECT_EQ(s42.next_u64(), 0x28efe333b266f103ULL);
  EXPECT_EQ(s42.next_u64(), 0x47526757130f9f52ULL);
}

TEST(Rng, UniformUsesTop53Bits) {
  RngStream rng(42);
  EXPECT_EQ(rng.uniform(), 0.7415648787718233);
}

TEST(Rng, SameSeedSameSequence) {
  RngStream a(7), b(7);
  EXPECT_EQ(gaussian(a, {2}), gaussian(b, {2}));
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, GaussianMoments) {
  RngStream rng(2024);
  const Tensor x = gaussian(rng, {100000});
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= 1e5;
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= 1e5;
  EXPECT_LT(std::abs(mean), 0.02);
  EXPECT_LT(std::abs(var - 1.0), 0.05);
}

TEST(Rng, IndexCoversRangeUniformly) {
  RngStream rng(9);
  std::vector<int> counts(6, 0);
  for (int i = 0; i < 60000; ++i) ++counts[rng.index(6)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  EXPECT_THROW(rng.index(0), ContractViolation);
}

TEST(Rng, DeriveIsIndependentOfParentPosition) {
  RngStream a(5);
  const RngStream before = a.derive(3);
  a.next_u64();
  RngStream after = a.derive(3);
  RngStream b = before;
  EXPECT_EQ(b.next_u64(), after.next_u64());
  EXPECT_NE(a.derive(3).next_u64(), a.derive(4).next_u64());
}

TEST(Rng, ShuffleIsPermutation) {
  RngStream rng(1);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(v);
  std::set<int> seen(v.begin(), v.end());
  EXPECT_EQ(seen.size(), 50u);
  std::vector<int> sorted(50);
  std::iota(sorted.begin(), sorted.end(), 0);
  EXPECT_NE(v, sorted);
}

TEST(Parallel, VisitsEveryIndexAndRethrows) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10,
                            [](std::size_t i) {
                              if (i == 7) throw DimensionError("boom");
                            }),
               DimensionError);
}

}  // namespace
}  // namespace camnorm
