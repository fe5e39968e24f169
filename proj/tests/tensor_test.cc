// Copyright 2026 The merc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "merc/error.h"
#include "merc/rng.h"
#include "merc/tensor.h"

namespace merc {
namespace {

Tensor<double> random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Tensor<double> t({r, c});
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Triple loop reference.
Tensor<double> naive_matmul(const Tensor<double>& a, const Tensor<double>& b) {
  Tensor<double> out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Tensor<double> transpose(const Tensor<double>& a) {
  Tensor<double> out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void expect_near(const Tensor<double>& a, const Tensor<double>& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

TEST(Tensor, ShapeAndValueCount) {
  Tensor<float> t({2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_FLOAT_EQ(t(1, 2), 1.5f);
  EXPECT_THROW(Tensor<float>({2, 0}), Error);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>(3)), Error);
}

TEST(Tensor, AllFinite) {
  Tensor<double> t({2});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Tensor, MatmulKernelsMatchTripleLoop) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(7), k = 1 + rng.below(9), n = 1 + rng.below(5);
    const auto a = random_matrix(m, k, rng);
    const auto b = random_matrix(k, n, rng);
    expect_near(matmul_nn(a, b), naive_matmul(a, b), 1e-12);
    expect_near(matmul_nt(a, transpose(b)), naive_matmul(a, b), 1e-12);

    const auto c = random_matrix(m, n, rng);
    Tensor<double> acc({k, n}, 0.5);
    matmul_tn_accumulate(a, c, acc);
    auto want = naive_matmul(transpose(a), c);
    for (auto& v : want.values()) v += 0.5;
    expect_near(acc, want, 1e-12);
  }
}

TEST(Tensor, MatmulRejectsMismatchedInner) {
  Tensor<float> a({2, 3});
  Tensor<float> b({4, 2});
  EXPECT_THROW(matmul_nn(a, b), Error);
  EXPECT_THROW(matmul_nt(a, b), Error);
}

TEST(Tensor, SliceAndAssignColumnsRoundTrip) {
  Rng rng(5);
  const auto x = random_matrix(3, 7, rng);
  const auto mid = slice_cols(x, 2, 3);
  EXPECT_EQ(mid.shape(), (Shape{3, 3}));
  EXPECT_EQ(mid(1, 0), x(1, 2));
  Tensor<double> y({3, 7});
  assign_cols(y, 0, slice_cols(x, 0, 2));
  assign_cols(y, 2, mid);
  assign_cols(y, 5, slice_cols(x, 5, 2));
  EXPECT_EQ(y, x);
  EXPECT_THROW(slice_cols(x, 6, 2), Error);
}

TEST(Tensor, GatherRows) {
  Tensor<int> x({3, 2}, std::vector<int>{1, 2, 3, 4, 5, 6});
  const std::vector<std::size_t> idx{2, 0, 2};
  const auto g = gather_rows(x, std::span<const std::size_t>(idx));
  EXPECT_EQ(g, (Tensor<int>({3, 2}, std::vector<int>{5, 6, 1, 2, 5, 6})));
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(Rng::derive(1, 0), Rng::derive(1, 1));
  EXPECT_NE(Rng::derive(1, 0), Rng::derive(2, 0));
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

}  // namespace
}  // namespace merc
