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

#include "merc/optim.h"

#include <cmath>
#include <string>

namespace merc {
namespace {

template <typename T>
void update(const std::vector<Param<T>*>& params, OptimState<T>& state, bool decoupled) {
  if (state.first_moment.empty()) {
    for (const Param<T>* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw Error(ErrorKind::kDimension, "optimizer: parameter list changed between steps");
  }

  const OptimConfig& c = state.config;
  state.step += 1;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T lr = static_cast<T>(c.lr);
  const T wd = static_cast<T>(c.weight_decay);
  const T eps = static_cast<T>(c.eps);
  const T inv_bias1 = static_cast<T>(1.0 / bias1);
  const T inv_bias2 = static_cast<T>(1.0 / bias2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<T>& p = *params[i];
    Tensor<T>& m = state.first_moment[i];
    Tensor<T>& v = state.second_moment[i];
    if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
      throw Error(ErrorKind::kDimension, "optimizer: shape mismatch for " + p.name);
    }
    T* w = p.value.data();
    const T* g = p.grad.data();
    T* mp = m.data();
    T* vp = v.data();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      T grad = g[j];
      if (decoupled) {
        w[j] -= lr * wd * w[j];
      } else {
        grad += wd * w[j];
      }
      mp[j] = b1 * mp[j] + (T{1} - b1) * grad;
      vp[j] = b2 * vp[j] + (T{1} - b2) * grad * grad;
      const T m_hat = mp[j] * inv_bias1;
      const T v_hat = vp[j] * inv_bias2;
      w[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace

template <typename T>
void adam_step(const std::vector<Param<T>*>& params, OptimState<T>& state) {
  update(params, state, /*decoupled=*/false);
}

template <typename T>
void adamw_step(const std::vector<Param<T>*>& params, OptimState<T>& state) {
  update(params, state, /*decoupled=*/true);
}

template void adam_step(const std::vector<Param<float>*>&, OptimState<float>&);
template void adam_step(const std::vector<Param<double>*>&, OptimState<double>&);
template void adamw_step(const std::vector<Param<float>*>&, OptimState<float>&);
template void adamw_step(const std::vector<Param<double>*>&, OptimState<double>&);

PlateauScheduler::PlateauScheduler(double lr, double factor, int patience, MetricMode mode)
    : lr_(lr), factor_(factor), patience_(patience), mode_(mode) {
  if (!(lr > 0.0) || !(factor > 0.0 && factor < 1.0) || patience < 0) {
    throw Error(ErrorKind::kConfig, "plateau scheduler: need lr > 0, factor in (0,1), "
                                    "patience >= 0");
  }
}

double PlateauScheduler::step(double metric) {
  if (!std::isfinite(metric)) {
    throw Error(ErrorKind::kNumeric, "plateau scheduler: non-finite metric");
  }
  const bool improved =
      !best_ || (mode_ == MetricMode::kMaximize ? metric > *best_ : metric < *best_);
  if (improved) {
    best_ = metric;
    epochs_since_improve_ = 0;
    return lr_;
  }
  epochs_since_improve_ += 1;
  if (epochs_since_improve_ > patience_) {
    lr_ *= factor_;
    reductions_ += 1;
    epochs_since_improve_ = 0;
  }
  return lr_;
}

}  // namespace merc
