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

#ifndef MERC_LOSS_H_
#define MERC_LOSS_H_

#include <span>

#include "merc/tensor.h"

namespace merc {

template <typename T>
struct LossResult {
  T loss{};
  Tensor<T> grad;  // dL/dlogits, same shape as the logits
};

// Class-weighted cross-entropy with label smoothing.
//
// Each sample's target distribution is (1 - smoothing) * onehot + smoothing / K
// (the uniform mass includes the target class). The batch loss is
// sum_i w_i * l_i / sum_i w_i with w_i = class_weights[target_i], so uniform
// logits give exactly ln K whatever the weights.
template <typename T>
LossResult<T> weighted_smoothed_ce(const Tensor<T>& logits, std::span<const int> targets,
                                   std::span<const double> class_weights, double smoothing);

}  // namespace merc

#endif  // MERC_LOSS_H_
