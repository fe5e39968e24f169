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

#include "merc/mamba.h"
#include "merc/rng.h"

namespace merc {
namespace {

template <typename T>
Tensor<T> filled(Shape shape, Rng& rng, double lo, double hi) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// args: sequence length, channels; d_state 64
void BM_ScanForward(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto ch = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  const auto u = filled<float>({T, ch}, rng, -1, 1);
  const auto delta = filled<float>({T, ch}, rng, 1e-3, 0.1);
  const auto A = filled<float>({ch, 64}, rng, -64, -1);
  const auto B = filled<float>({T, 64}, rng, -1, 1);
  const auto C = filled<float>({T, 64}, rng, -1, 1);
  const auto D = filled<float>({ch}, rng, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(selective_scan(u, delta, A, B, C, D));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T * ch * 64));
}
BENCHMARK(BM_ScanForward)->Args({8, 2048})->Args({20, 2048})->Args({6, 256});

void BM_ScanBackward(benchmark::State& state) {
  const auto T = static_cast<std::size_t>(state.range(0));
  const auto ch = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const auto u = filled<float>({T, ch}, rng, -1, 1);
  const auto delta = filled<float>({T, ch}, rng, 1e-3, 0.1);
  const auto A = filled<float>({ch, 64}, rng, -64, -1);
  const auto B = filled<float>({T, 64}, rng, -1, 1);
  const auto C = filled<float>({T, 64}, rng, -1, 1);
  const auto D = filled<float>({ch}, rng, -1, 1);
  const auto dy = filled<float>({T, ch}, rng, -1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(selective_scan_backward(u, delta, A, B, C, D, dy));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(T * ch * 64));
}
BENCHMARK(BM_ScanBackward)->Args({8, 2048})->Args({20, 2048});

}  // namespace
}  // namespace merc
