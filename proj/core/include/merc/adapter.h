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

#ifndef MERC_ADAPTER_H_
#define MERC_ADAPTER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "merc/layers.h"
#include "merc/rng.h"
#include "merc/tensor.h"
#include "merc/training.h"

namespace merc {

inline constexpr std::size_t kAdapterInput = 512;
inline constexpr std::size_t kAdapterHidden1 = 256;
inline constexpr std::size_t kAdapterHidden2 = 128;
inline constexpr std::size_t kAdapterClasses = 7;

// 512 -> 256 -> 128 -> 7 MLP; each hidden layer is Linear -> BN -> ReLU -> Dropout.
template <typename T>
struct AdapterParams {
  LinearLayer<T> linear1;
  BatchNormLayer<T> bn1;
  LinearLayer<T> linear2;
  BatchNormLayer<T> bn2;
  LinearLayer<T> linear3;
  double dropout_rate = 0.3;

  static AdapterParams create(std::uint64_t seed);
  std::vector<Param<T>*> parameters();

  template <typename U>
  AdapterParams<U> cast() const;
};

template <typename T>
struct AdapterCache {
  Tensor<T> x;
  BatchNormCache<T> bn1;
  Tensor<T> a1;  // post-BN, pre-ReLU
  DropoutMask<T> drop1;
  Tensor<T> d1;  // linear2 input
  BatchNormCache<T> bn2;
  Tensor<T> a2;
  DropoutMask<T> drop2;
  Tensor<T> d2;  // linear3 input
};

template <typename T>
struct AdapterOutput {
  Tensor<T> logits;       // [batch, 7]
  Tensor<T> penultimate;  // [batch, 128], after the second ReLU, before dropout
};

// Training mode uses batch statistics (batch >= 2) and draws dropout masks
// from `rng`. Pass `cache` to enable adapter_backward.
template <typename T>
AdapterOutput<T> adapter_forward(const Tensor<T>& x, AdapterParams<T>& params, bool training,
                                 Rng& rng, AdapterCache<T>* cache = nullptr);

// Eval mode: running BN statistics, no dropout.
template <typename T>
AdapterOutput<T> adapter_forward(const Tensor<T>& x, const AdapterParams<T>& params);

// Accumulates parameter gradients from dL/dlogits; returns dL/dx.
template <typename T>
Tensor<T> adapter_backward(const Tensor<T>& dlogits, const AdapterCache<T>& cache,
                           AdapterParams<T>& params);

struct AdapterTrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  double plateau_factor = 0.1;
  int plateau_patience = 5;
  int batch_size = 32;
  int max_epochs = 100;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledSet {
  Tensor<float> x;  // [n, 512]
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

struct AdapterTrainResult {
  AdapterParams<float> params;  // best validation macro-F1 checkpoint
  TrainHistory history;
};

// Adam (coupled L2 decay), unweighted cross-entropy, reduce-on-plateau on
// validation macro F1, early stopping. A trailing batch of one sample is
// skipped because batch norm cannot train on it.
AdapterTrainResult train_adapter(const LabeledSet& train, const LabeledSet& val,
                                 const AdapterTrainConfig& cfg);

EvalMetrics evaluate_adapter(const AdapterParams<float>& params, const LabeledSet& set);

// Eval-mode penultimate activations, [n, 128].
Tensor<float> extract_adapted(const Tensor<float>& x, const AdapterParams<float>& params);

// ADP1 container; batch-norm running statistics are stored alongside the
// trainable tensors.
void save_adapter(const AdapterParams<float>& params, const std::filesystem::path& path);
AdapterParams<float> load_adapter(const std::filesystem::path& path);

}  // namespace merc

#endif  // MERC_ADAPTER_H_
