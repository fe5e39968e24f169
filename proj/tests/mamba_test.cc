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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "merc/error.h"
#include "merc/mamba.h"
#include "merc/rng.h"
#include "support/oracles.h"

namespace merc {
namespace {

Tensor<double> random_matrix(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

TEST(CausalConv, IdentityKernelCopiesInput) {
  Rng rng(1);
  const auto u = random_matrix({6, 3}, rng);
  Tensor<double> kernel({3, 4});
  for (std::size_t c = 0; c < 3; ++c) kernel(c, 3) = 1.0;
  const auto y = depthwise_causal_conv(u, kernel, Tensor<double>({3}));
  EXPECT_EQ(y, u);
}

TEST(CausalConv, OnesKernelIsRunningWindowSum) {
  const Tensor<double> u({7, 1}, 1.0);
  const Tensor<double> kernel({1, 4}, 1.0);
  const auto y = depthwise_causal_conv(u, kernel, Tensor<double>({1}));
  const std::vector<double> expected{1, 2, 3, 4, 4, 4, 4};
  for (std::size_t t = 0; t < 7; ++t) EXPECT_EQ(y(t, 0), expected[t]);
}

TEST(CausalConv, BiasAndChannelsIndependent) {
  Tensor<double> u({3, 2});
  u(0, 0) = 1.0;
  u(1, 1) = 2.0;
  Tensor<double> kernel({2, 2});
  kernel(0, 0) = 10.0;
  kernel(0, 1) = 1.0;
  kernel(1, 1) = 3.0;
  Tensor<double> bias({2}, std::vector<double>{0.5, -0.5});
  const auto y = depthwise_causal_conv(u, kernel, bias);
  EXPECT_EQ(y(0, 0), 1.5);
  EXPECT_EQ(y(1, 0), 10.5);
  EXPECT_EQ(y(2, 0), 0.5);
  EXPECT_EQ(y(0, 1), -0.5);
  EXPECT_EQ(y(1, 1), 5.5);
  EXPECT_EQ(y(2, 1), -0.5);
}

TEST(CausalConv, FutureInputsDoNotLeak) {
  Rng rng(4);
  auto u = random_matrix({10, 5}, rng);
  const auto kernel = random_matrix({5, 4}, rng);
  const auto bias = random_matrix({5}, rng);
  const auto before = depthwise_causal_conv(u, kernel, bias);
  for (std::size_t c = 0; c < 5; ++c) u(6, c) += 3.0;
  const auto after = depthwise_causal_conv(u, kernel, bias);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(before(t, c), after(t, c));
}

TEST(SelectiveScan, HandExample) {
  const double ln2 = std::log(2.0);
  const Tensor<double> u({2, 1}, 1.0);
  const Tensor<double> delta({2, 1}, ln2);
  const Tensor<double> A({1, 1}, -1.0);
  const Tensor<double> B({2, 1}, 1.0);
  const Tensor<double> C({2, 1}, 1.0);
  const Tensor<double> D({1}, 0.0);
  const auto y = selective_scan(u, delta, A, B, C, D);
  EXPECT_NEAR(y(0, 0), ln2, 1e-15);
  EXPECT_NEAR(y(1, 0), 0.5 * ln2 + ln2, 1e-15);
  EXPECT_NEAR(y(1, 0), 1.0397, 1e-4);
}

TEST(SelectiveScan, VanishingStepLeavesSkipPath) {
  Rng rng(7);
  const auto u = random_matrix({5, 3}, rng);
  const Tensor<double> delta({5, 3}, 1e-300);
  const auto A = random_matrix({3, 4}, rng, -2.0, -0.1);
  const auto B = random_matrix({5, 4}, rng);
  const auto C = random_matrix({5, 4}, rng);
  const auto D = random_matrix({3}, rng);
  const auto y = selective_scan(u, delta, A, B, C, D);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y(t, c), D[c] * u(t, c), 1e-12);
}

TEST(SelectiveScan, MatchesNaiveLoop) {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t T = 1 + rng.below(12);
    const std::size_t ch = 1 + rng.below(6);
    const std::size_t n = 1 + rng.below(8);
    const auto u = random_matrix({T, ch}, rng);
    const auto delta = random_matrix({T, ch}, rng, 1e-3, 1.0);
    const auto A = random_matrix({ch, n}, rng, -3.0, -0.01);
    const auto B = random_matrix({T, n}, rng);
    const auto C = random_matrix({T, n}, rng);
    const auto D = random_matrix({ch}, rng);
    const auto fast = selective_scan(u, delta, A, B, C, D);
    const auto slow = testing::naive_selective_scan(u, delta, A, B, C, D);
    worst = std::max(worst, testing::max_abs_diff(fast, slow));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(SelectiveScan, NonPositiveStepIsNumericError) {
  const Tensor<double> u({2, 1}, 1.0);
  Tensor<double> delta({2, 1}, 0.5);
  delta(1, 0) = 0.0;
  try {
    selective_scan(u, delta, Tensor<double>({1, 1}, -1.0), Tensor<double>({2, 1}, 1.0),
                   Tensor<double>({2, 1}, 1.0), Tensor<double>({1}));
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
  }
  delta(1, 0) = -0.1;
  EXPECT_THROW(selective_scan(u, delta, Tensor<double>({1, 1}, -1.0), Tensor<double>({2, 1}, 1.0),
                              Tensor<double>({2, 1}, 1.0), Tensor<double>({1})),
               Error);
}

MambaConfig small_config() {
  MambaConfig cfg;
  cfg.d_model = 8;
  cfg.d_state = 4;
  cfg.expand = 2;
  cfg.d_conv = 4;
  cfg.classes = 3;
  return cfg;
}

TEST(MambaBlock, SingleTokenShape) {
  const auto params = MambaParams<double>::create(small_config(), 3);
  Rng rng(5);
  const auto y = mamba_block_forward(random_matrix({1, 8}, rng), params);
  EXPECT_EQ(y.shape(), (Shape{1, 8}));
  EXPECT_TRUE(y.all_finite());
}

TEST(MambaBlock, InitialisationFollowsConvention) {
  const auto params = MambaParams<double>::create(small_config(), 3);
  const auto A = params.state_matrix();
  for (std::size_t c = 0; c < 16; ++c) {
    EXPECT_EQ(params.D.value[c], 1.0);
    for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(A(c, n), -static_cast<double>(n + 1), 1e-12);
  }
}

TEST(MambaBlock, WidthMismatchIsConfigError) {
  const auto params = MambaParams<double>::create(small_config(), 3);
  try {
    mamba_block_forward(Tensor<double>({3, 9}), params);
    FAIL() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
}

TEST(MambaBlock, SuffixEditsLeavePrefixBitIdentical) {
  const auto params = MambaParams<double>::create(small_config(), 9);
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t T = 2 + rng.below(10);
    const std::size_t cut = 1 + rng.below(T - 1);
    auto x = random_matrix({T, 8}, rng);
    const auto before = mamba_block_forward(x, params);
    for (std::size_t t = cut; t < T; ++t)
      for (std::size_t d = 0; d < 8; ++d) x(t, d) = rng.uniform(-5.0, 5.0);
    const auto after = mamba_block_forward(x, params);
    for (std::size_t t = 0; t < cut; ++t)
      for (std::size_t d = 0; d < 8; ++d) ASSERT_EQ(before(t, d), after(t, d));
  }
}

TEST(MambaBlock, PackedMatchesSeparate) {
  const auto params = MambaParams<double>::create(small_config(), 21);
  Rng rng(17);
  const auto a = random_matrix({4, 8}, rng);
  const auto b = random_matrix({2, 8}, rng);
  Tensor<double> packed({6, 8});
  std::copy(a.values().begin(), a.values().end(), packed.data());
  std::copy(b.values().begin(), b.values().end(), packed.data() + 32);
  const std::vector<std::size_t> lengths{4, 2};
  const auto y = mamba_block_forward_packed(packed, lengths, params);
  const auto ya = mamba_block_forward(a, params);
  const auto yb = mamba_block_forward(b, params);
  for (std::size_t d = 0; d < 8; ++d) {
    for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(y(t, d), ya(t, d), 1e-14);
    for (std::size_t t = 0; t < 2; ++t) EXPECT_NEAR(y(4 + t, d), yb(t, d), 1e-14);
  }
}

TEST(MambaBlock, IsolatedPackIsBitIdenticalToSingleSequences) {
  MambaConfig cfg;
  cfg.d_model = 64;
  cfg.d_state = 16;
  const auto params = MambaParams<float>::create(cfg, 3);
  Rng rng(4);
  const std::vector<std::size_t> lengths{5, 2, 11, 1, 2, 9};
  std::size_t total = 0;
  for (const std::size_t len : lengths) total += len;
  const auto packed = random_matrix({total, 64}, rng).cast<float>();
  const auto iso = mamba_block_forward_packed(packed, lengths, params);
  const auto fast = mamba_block_forward_packed<float>(packed, lengths, params, nullptr, false);
  std::size_t begin = 0;
  for (const std::size_t len : lengths) {
    Tensor<float> one({len, 64});
    std::copy(packed.data() + begin * 64, packed.data() + (begin + len) * 64, one.data());
    const auto alone = mamba_block_forward(one, params);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t d = 0; d < 64; ++d) {
        ASSERT_EQ(iso(begin + t, d), alone(t, d));
        ASSERT_NEAR(fast(begin + t, d), alone(t, d), 1e-5);
      }
    }
    begin += len;
  }
}

TEST(MaskedMeanPool, AveragesValidRows) {
  Tensor<double> seq({3, 2}, std::vector<double>{1, 2, 3, 4, 100, 100});
  const std::vector<std::uint8_t> mask{1, 1, 0};
  const auto p = masked_mean_pool(seq, mask);
  EXPECT_EQ(p[0], 2.0);
  EXPECT_EQ(p[1], 3.0);
}

TEST(MaskedMeanPool, PaddingContentIsIgnored) {
  Rng rng(8);
  auto seq = random_matrix({6, 4}, rng);
  const std::vector<std::uint8_t> mask{1, 1, 1, 1, 0, 0};
  const auto a = masked_mean_pool(seq, mask);
  for (std::size_t d = 0; d < 4; ++d) seq(5, d) = 1e6;
  EXPECT_EQ(masked_mean_pool(seq, mask), a);
}

TEST(MaskedMeanPool, AllMaskedIsPoolingError) {
  const Tensor<double> seq({2, 2}, 1.0);
  const std::vector<std::uint8_t> mask{0, 0};
  try {
    masked_mean_pool(seq, mask);
    FAIL() << "expected a pooling error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kPooling);
  }
}

}  // namespace
}  // namespace merc
