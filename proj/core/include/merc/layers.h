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

#ifndef MERC_LAYERS_H_
#define MERC_LAYERS_H_

#include <cstddef>
#include <string>
#include <vector>

#include "merc/rng.h"
#include "merc/tensor.h"

namespace merc {

// A trainable tensor and its accumulated gradient (same shape).
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T{0}); }
};

template <typename U, typename T>
Param<U> cast_param(const Param<T>& p) {
  return Param<U>(p.name, p.value.template cast<U>());
}

template <typename T>
void zero_grads(const std::vector<Param<T>*>& params) {
  for (Param<T>* p : params) p->zero_grad();
}

// Fully connected layer: y = x W^T + b, with W stored [out, in].
template <typename T>
struct LinearLayer {
  Param<T> weight;
  Param<T> bias;  // empty for bias-free projections

  // Uniform(-1/sqrt(in), 1/sqrt(in)) init for weight and bias.
  static LinearLayer create(const std::string& name, std::size_t in, std::size_t out,
                            bool with_bias, Rng& rng);

  std::size_t in_features() const { return weight.value.cols(); }
  std::size_t out_features() const { return weight.value.rows(); }
  bool has_bias() const { return !bias.value.empty(); }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&weight);
    if (has_bias()) out.push_back(&bias);
  }
};

template <typename U, typename T>
LinearLayer<U> cast_layer(const LinearLayer<T>& layer) {
  LinearLayer<U> out;
  out.weight = cast_param<U>(layer.weight);
  if (layer.has_bias()) out.bias = cast_param<U>(layer.bias);
  return out;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const LinearLayer<T>& layer);

// Accumulates weight/bias gradients; returns dL/dx unless `need_input_grad`
// is false (then an empty tensor).
template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& dy, LinearLayer<T>& layer,
                          bool need_input_grad = true);

template <typename T>
struct BatchNormLayer {
  Param<T> gamma;
  Param<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormLayer create(const std::string& name, std::size_t features);

  std::size_t features() const { return gamma.value.size(); }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }
};

template <typename U, typename T>
BatchNormLayer<U> cast_layer(const BatchNormLayer<T>& layer) {
  BatchNormLayer<U> out;
  out.gamma = cast_param<U>(layer.gamma);
  out.beta = cast_param<U>(layer.beta);
  out.running_mean.assign(layer.running_mean.begin(), layer.running_mean.end());
  out.running_var.assign(layer.running_var.begin(), layer.running_var.end());
  out.momentum = layer.momentum;
  out.eps = layer.eps;
  return out;
}

template <typename T>
struct BatchNormCache {
  Tensor<T> x_hat;
  std::vector<T> inv_std;
  bool training = false;
};

// Training mode normalizes with the (biased) batch statistics and folds them
// into the running estimates (unbiased variance); eval mode uses the running
// estimates. Training requires batch >= 2.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormLayer<T>& layer, bool training,
                            BatchNormCache<T>* cache = nullptr);

// Eval-mode normalization with the running estimates; never mutates `layer`.
template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const BatchNormLayer<T>& layer);

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache,
                             BatchNormLayer<T>& layer);

template <typename T> T sigmoid(T x);
template <typename T> T softplus(T x);
template <typename T> T silu(T x);
template <typename T> T silu_derivative(T x);

template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> silu(const Tensor<T>& x);
template <typename T> Tensor<T> softplus(const Tensor<T>& x);

// Each takes the forward input `x` and the upstream gradient `dy`.
template <typename T> Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);
template <typename T> Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy);
template <typename T> Tensor<T> softplus_backward(const Tensor<T>& x, const Tensor<T>& dy);

// Per-element multiplier applied in the forward pass; empty means identity.
template <typename T>
struct DropoutMask {
  std::vector<T> scale;
};

// Inverted dropout. Identity when not training or when rate == 0 (the RNG is
// not consumed in either case). rate must lie in [0, 1).
template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Rng& rng, bool training,
                          DropoutMask<T>* mask = nullptr);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const DropoutMask<T>& mask);

}  // namespace merc

#endif  // MERC_LAYERS_H_
