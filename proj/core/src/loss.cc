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

#include "merc/loss.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace merc {

template <typename T>
LossResult<T> weighted_smoothed_ce(const Tensor<T>& logits, std::span<const int> targets,
                                   std::span<const double> class_weights, double smoothing) {
  if (logits.rank() != 2) {
    throw Error(ErrorKind::kDimension, "loss: logits must be [batch, K]");
  }
  const std::size_t batch = logits.rows();
  const std::size_t k = logits.cols();
  if (targets.size() != batch) {
    throw Error(ErrorKind::kDimension, "loss: " + std::to_string(targets.size()) +
                                           " targets for batch of " + std::to_string(batch));
  }
  if (class_weights.size() != k) {
    throw Error(ErrorKind::kConfig, "loss: expected " + std::to_string(k) +
                                        " class weights, got " +
                                        std::to_string(class_weights.size()));
  }
  for (const double w : class_weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::kConfig, "loss: class weights must be positive");
  }
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw Error(ErrorKind::kConfig, "loss: smoothing must lie in [0, 1)");
  }

  const T off = static_cast<T>(smoothing / static_cast<double>(k));
  const T on = static_cast<T>(1.0 - smoothing) + off;

  double weight_sum = 0.0;
  for (const int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw Error(ErrorKind::kLabel, "loss: target " + std::to_string(t) +
                                         " outside [0, " + std::to_string(k) + ")");
    }
    weight_sum += class_weights[static_cast<std::size_t>(t)];
  }

  LossResult<T> result;
  result.grad = Tensor<T>(logits.shape());
  std::vector<T> log_probs(k);
  T total{0};
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = logits.row(i);
    const auto arg = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    const T max = row[arg];
    // The max term contributes exactly 1; log1p keeps the rest when it is tiny.
    T rest{0};
    for (std::size_t j = 0; j < k; ++j) {
      if (j != arg) rest += std::exp(row[j] - max);
    }
    const T log_sum = std::log1p(rest);
    for (std::size_t j = 0; j < k; ++j) log_probs[j] = row[j] - max - log_sum;

    const auto target = static_cast<std::size_t>(targets[i]);
    T sample_loss{0};
    for (std::size_t j = 0; j < k; ++j) {
      sample_loss -= (j == target ? on : off) * log_probs[j];
    }
    const T w = static_cast<T>(class_weights[target] / weight_sum);
    total += w * sample_loss;

    // d l_i / d z = softmax(z) - q, since q sums to one.
    auto g = result.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      g[j] = w * (std::exp(log_probs[j]) - (j == target ? on : off));
    }
  }
  result.loss = total;
  return result;
}

template LossResult<float> weighted_smoothed_ce(const Tensor<float>&, std::span<const int>,
                                                std::span<const double>, double);
template LossResult<double> weighted_smoothed_ce(const Tensor<double>&, std::span<const int>,
                                                 std::span<const double>, double);

}  // namespace merc
