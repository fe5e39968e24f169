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

#include "merc/layers.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace merc {

template <typename T>
LinearLayer<T> LinearLayer<T>::create(const std::string& name, std::size_t in,
                                      std::size_t out, bool with_bias, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  LinearLayer layer;
  Tensor<T> w({out, in});
  for (T& v : w.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  layer.weight = Param<T>(name + ".weight", std::move(w));
  if (with_bias) {
    Tensor<T> b({out});
    for (T& v : b.values()) v = static_cast<T>(rng.uniform(-bound, bound));
    layer.bias = Param<T>(name + ".bias", std::move(b));
  }
  return layer;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const LinearLayer<T>& layer) {
  require_matrix(x, layer.in_features(), "linear_forward");
  Tensor<T> y = matmul_nt(x, layer.weight.value);
  if (layer.has_bias()) {
    const std::size_t out = layer.out_features();
    const T* b = layer.bias.value.data();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      T* row = y.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) row[j] += b[j];
    }
  }
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& dy, LinearLayer<T>& layer,
                          bool need_input_grad) {
  require_matrix(x, layer.in_features(), "linear_backward input");
  require_matrix(dy, layer.out_features(), "linear_backward grad");
  matmul_tn_accumulate(dy, x, layer.weight.grad);
  if (layer.has_bias()) {
    const std::size_t out = layer.out_features();
    T* gb = layer.bias.grad.data();
    for (std::size_t r = 0; r < dy.rows(); ++r) {
      const T* row = dy.data() + r * out;
      for (std::size_t j = 0; j < out; ++j) gb[j] += row[j];
    }
  }
  if (!need_input_grad) return {};
  return matmul_nn(dy, layer.weight.value);
}

template <typename T>
BatchNormLayer<T> BatchNormLayer<T>::create(const std::string& name, std::size_t features) {
  BatchNormLayer layer;
  layer.gamma = Param<T>(name + ".gamma", Tensor<T>({features}, T{1}));
  layer.beta = Param<T>(name + ".beta", Tensor<T>({features}, T{0}));
  layer.running_mean.assign(features, T{0});
  layer.running_var.assign(features, T{1});
  return layer;
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const BatchNormLayer<T>& layer) {
  const std::size_t features = layer.features();
  require_matrix(x, features, "batchnorm_eval");
  Tensor<T> y(x.shape());
  for (std::size_t j = 0; j < features; ++j) {
    const T inv_std = T{1} / std::sqrt(layer.running_var[j] + static_cast<T>(layer.eps));
    const T g = layer.gamma.value[j] * inv_std;
    const T b = layer.beta.value[j] - g * layer.running_mean[j];
    for (std::size_t r = 0; r < x.rows(); ++r) y(r, j) = g * x(r, j) + b;
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormLayer<T>& layer, bool training,
                            BatchNormCache<T>* cache) {
  const std::size_t features = layer.features();
  require_matrix(x, features, "batchnorm_forward");
  const std::size_t n = x.rows();
  if (training && n < 2) {
    throw Error(ErrorKind::kInvalidBatch,
                "batch norm in training mode needs batch >= 2, got " + std::to_string(n));
  }

  std::vector<T> mean(features, T{0});
  std::vector<T> inv_std(features);
  if (training) {
    std::vector<T> var(features, T{0});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < features; ++j) mean[j] += x(r, j);
    }
    for (std::size_t j = 0; j < features; ++j) mean[j] /= static_cast<T>(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < features; ++j) {
        const T d = x(r, j) - mean[j];
        var[j] += d * d;
      }
    }
    const T m = static_cast<T>(layer.momentum);
    for (std::size_t j = 0; j < features; ++j) {
      const T biased = var[j] / static_cast<T>(n);
      const T unbiased = var[j] / static_cast<T>(n - 1);
      inv_std[j] = T{1} / std::sqrt(biased + static_cast<T>(layer.eps));
      layer.running_mean[j] = (T{1} - m) * layer.running_mean[j] + m * mean[j];
      layer.running_var[j] = (T{1} - m) * layer.running_var[j] + m * unbiased;
    }
  } else {
    for (std::size_t j = 0; j < features; ++j) {
      mean[j] = layer.running_mean[j];
      inv_std[j] = T{1} / std::sqrt(layer.running_var[j] + static_cast<T>(layer.eps));
    }
  }

  Tensor<T> x_hat(x.shape());
  Tensor<T> y(x.shape());
  const T* gamma = layer.gamma.value.data();
  const T* beta = layer.beta.value.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < features; ++j) {
      const T h = (x(r, j) - mean[j]) * inv_std[j];
      x_hat(r, j) = h;
      y(r, j) = gamma[j] * h + beta[j];
    }
  }
  if (cache) {
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->training = training;
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache,
                             BatchNormLayer<T>& layer) {
  const std::size_t features = layer.features();
  require_matrix(dy, features, "batchnorm_backward");
  const std::size_t n = dy.rows();
  const Tensor<T>& x_hat = cache.x_hat;
  const T* gamma = layer.gamma.value.data();
  T* g_gamma = layer.gamma.grad.data();
  T* g_beta = layer.beta.grad.data();

  std::vector<T> sum_dy(features, T{0});
  std::vector<T> sum_dy_xhat(features, T{0});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < features; ++j) {
      sum_dy[j] += dy(r, j);
      sum_dy_xhat[j] += dy(r, j) * x_hat(r, j);
    }
  }
  for (std::size_t j = 0; j < features; ++j) {
    g_gamma[j] += sum_dy_xhat[j];
    g_beta[j] += sum_dy[j];
  }

  Tensor<T> dx(dy.shape());
  if (!cache.training) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < features; ++j) {
        dx(r, j) = dy(r, j) * gamma[j] * cache.inv_std[j];
      }
    }
    return dx;
  }
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < features; ++j) {
      // dL/dx_hat summed terms are scaled by gamma once, outside the sums.
      dx(r, j) = gamma[j] * cache.inv_std[j] * inv_n *
                 (static_cast<T>(n) * dy(r, j) - sum_dy[j] - x_hat(r, j) * sum_dy_xhat[j]);
    }
  }
  return dx;
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
T softplus(T x) {
  // max(x, 0) + log(1 + e^-|x|) never overflows.
  return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
T silu(T x) {
  return x * sigmoid(x);
}

template <typename T>
T silu_derivative(T x) {
  const T s = sigmoid(x);
  return s * (T{1} + x * (T{1} - s));
}

namespace {

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& x, F f) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

template <typename T>
void require_same_shape(const Tensor<T>& x, const Tensor<T>& dy, const char* what) {
  if (x.shape() != dy.shape()) {
    throw Error(ErrorKind::kDimension, std::string(what) + ": shape mismatch");
  }
}

template <typename T, typename F>
Tensor<T> map2(const Tensor<T>& x, const Tensor<T>& dy, F f) {
  require_same_shape(x, dy, "relu_backward");
  Tensor<T> dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = f(x[i], dy[i]);
  return dx;
}

}  // namespace

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return map(x, [](T v) { return v > T{0} ? v : T{0}; });
}

template <typename T>
using ArrayMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
using MutArrayMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
Tensor<T> silu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const ArrayMap<T> a(x.data(), n);
  MutArrayMap<T>(y.data(), n) = a / (T{1} + (-a).exp());
  return y;
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const ArrayMap<T> a(x.data(), n);
  MutArrayMap<T>(y.data(), n) = a.max(T{0}) + (-a.abs()).exp().log1p();
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  return map2(x, dy, [](T v, T g) { return v > T{0} ? g : T{0}; });
}

template <typename T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require_same_shape(x, dy, "silu_backward");
  Tensor<T> out(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const ArrayMap<T> a(x.data(), n);
  const ArrayMap<T> g(dy.data(), n);
  const Eigen::Array<T, Eigen::Dynamic, 1> s = T{1} / (T{1} + (-a).exp());
  MutArrayMap<T>(out.data(), n) = g * s * (T{1} + a * (T{1} - s));
  return out;
}

template <typename T>
Tensor<T> softplus_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  require_same_shape(x, dy, "softplus_backward");
  Tensor<T> out(x.shape());
  const auto n = static_cast<Eigen::Index>(x.size());
  const ArrayMap<T> a(x.data(), n);
  const ArrayMap<T> g(dy.data(), n);
  MutArrayMap<T>(out.data(), n) = g / (T{1} + (-a).exp());
  return out;
}

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Rng& rng, bool training,
                          DropoutMask<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorKind::kConfig, "dropout rate must lie in [0, 1), got " +
                                        std::to_string(rate));
  }
  if (mask) mask->scale.clear();
  if (!training || rate == 0.0) return x;

  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> y(x.shape());
  std::vector<T> scale(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale[i] = rng.uniform() < rate ? T{0} : keep_scale;
    y[i] = x[i] * scale[i];
  }
  if (mask) mask->scale = std::move(scale);
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const DropoutMask<T>& mask) {
  if (mask.scale.empty()) return dy;
  if (mask.scale.size() != dy.size()) {
    throw Error(ErrorKind::kDimension, "dropout_backward: mask size mismatch");
  }
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask.scale[i];
  return dx;
}

#define MERC_INSTANTIATE(T)                                                             \
  template struct LinearLayer<T>;                                                       \
  template struct BatchNormLayer<T>;                                                    \
  template Tensor<T> linear_forward(const Tensor<T>&, const LinearLayer<T>&);           \
  template Tensor<T> linear_backward(const Tensor<T>&, const Tensor<T>&, LinearLayer<T>&, \
                                     bool);                                             \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormLayer<T>&, bool,      \
                                       BatchNormCache<T>*);                             \
  template Tensor<T> batchnorm_eval(const Tensor<T>&, const BatchNormLayer<T>&);       \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,     \
                                        BatchNormLayer<T>&);                            \
  template T sigmoid(T);                                                                \
  template T softplus(T);                                                               \
  template T silu(T);                                                                   \
  template T silu_derivative(T);                                                        \
  template Tensor<T> relu(const Tensor<T>&);                                            \
  template Tensor<T> silu(const Tensor<T>&);                                            \
  template Tensor<T> softplus(const Tensor<T>&);                                        \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> silu_backward(const Tensor<T>&, const Tensor<T>&);                 \
  template Tensor<T> softplus_backward(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> dropout_forward(const Tensor<T>&, double, Rng&, bool, DropoutMask<T>*); \
  template Tensor<T> dropout_backward(const Tensor<T>&, const DropoutMask<T>&);

MERC_INSTANTIATE(float)
MERC_INSTANTIATE(double)
#undef MERC_INSTANTIATE

}  // namespace merc
