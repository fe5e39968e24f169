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


#include <benchmark/benchmark.h>

#include <vector>

#include "merc/fusion.h"
#include "merc/mamba.h"
#include "merc/rng.h"

namespace merc {
namespace {

// args: d_model, tokens per sequence; batch of 32 packed sequences
void BM_BlockForwardPacked(benchmark::State& state) {
  MambaConfig mc;
  mc.d_model = static_cast<std::size_t>(state.range(0));
  const auto T = static_cast<std::size_t>(state.range(1));
  const auto params = MambaParams<float>::create(mc, 1);
  Rng rng(3);
  Tensor<float> x({32 * T, mc.d_model});
  for (auto& v : x.values()) v = static_cast<float>(rng.normal());
  const std::vector<std::size_t> lengths(32, T);
  for (auto _ : state) benchmark::DoNotOptimize(mamba_block_forward_packed(x, lengths, params));
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_BlockForwardPacked)->Args({1024, 6})->Args({768, 6})->Args({128, 4})
    ->Unit(benchmark::kMillisecond);

void BM_BlockTrainStep(benchmark::State& state) {
  MambaConfig mc;
  mc.d_model = static_cast<std::size_t>(state.range(0));
  const std::size_t T = 6;
  auto params = MambaParams<float>::create(mc, 1);
  Rng rng(4);
  Tensor<float> x({32 * T, mc.d_model});
  for (auto& v : x.values()) v = static_cast<float>(rng.normal());
  Tensor<float> dout({32 * T, mc.d_model});
  for (auto& v : dout.values()) v = static_cast<float>(rng.normal());
  const std::vector<std::size_t> lengths(32, T);
  for (auto _ : state) {
    MambaCache<float> cache;
    mamba_block_forward_packed(x, lengths, params, &cache);
    mamba_block_backward(dout, cache, params);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_BlockTrainStep)->Arg(1024)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace merc
