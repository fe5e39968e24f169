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

#ifndef MERC_OPTIM_H_
#define MERC_OPTIM_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "merc/layers.h"

namespace merc {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Moment estimates for one parameter list. Moments are allocated on the first
// step and keep the parameter shapes from then on.
template <typename T>
struct OptimState {
  OptimConfig config;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::int64_t step = 0;

  explicit OptimState(OptimConfig c = {}) : config(c) {}
};

// Adam with L2 decay folded into the gradient (g + wd * w).
template <typename T>
void adam_step(const std::vector<Param<T>*>& params, OptimState<T>& state);

// AdamW: decoupled decay w <- w - lr * wd * w before the moment update.
template <typename T>
void adamw_step(const std::vector<Param<T>*>& params, OptimState<T>& state);

enum class MetricMode { kMaximize, kMinimize };

// Reduce-on-plateau: after more than `patience` consecutive epochs without
// improvement the learning rate is multiplied by `factor` and the counter
// resets.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor = 0.1, int patience = 5,
                   MetricMode mode = MetricMode::kMaximize);

  // Feeds one epoch's metric; returns the (possibly reduced) learning rate.
  double step(double metric);

  double lr() const { return lr_; }
  double factor() const { return factor_; }
  int patience() const { return patience_; }
  int reductions() const { return reductions_; }
  int epochs_since_improve() const { return epochs_since_improve_; }
  std::optional<double> best() const { return best_; }

 private:
  double lr_;
  double factor_;
  int patience_;
  MetricMode mode_;
  std::optional<double> best_;
  int epochs_since_improve_ = 0;
  int reductions_ = 0;
};

}  // namespace merc

#endif  // MERC_OPTIM_H_
