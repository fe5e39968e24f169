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

#ifndef MERC_MAMBA_H_
#define MERC_MAMBA_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "merc/layers.h"
#include "merc/tensor.h"

namespace merc {

struct MambaConfig {
  std::size_t d_model = 1024;
  std::size_t d_state = 64;
  std::size_t expand = 2;
  std::size_t d_conv = 4;
  std::size_t classes = 7;

  std::size_t d_inner() const { return expand * d_model; }
  std::size_t dt_rank() const { return (d_model + 15) / 16; }
  // Throws a config error on zero sizes.
  void validate() const;

  friend bool operator==(const MambaConfig&, const MambaConfig&) = default;
};

// A single Mamba block followed by a linear classification head.
template <typename T>
struct MambaParams {
  MambaConfig config;
  LinearLayer<T> in_proj;    // d_model -> 2 * d_inner (x and z halves), no bias
  Param<T> conv_weight;      // [d_inner, d_conv], depthwise
  Param<T> conv_bias;        // [d_inner]
  LinearLayer<T> x_proj;     // d_inner -> dt_rank + 2 * d_state, no bias
  LinearLayer<T> dt_proj;    // dt_rank -> d_inner
  Param<T> A_log;            // [d_inner, d_state], A = -exp(A_log)
  Param<T> D;                // [d_inner]
  LinearLayer<T> out_proj;   // d_inner -> d_model, no bias
  LinearLayer<T> classifier; // d_model -> classes

  // A_log = log(n + 1), D = 1, dt_proj bias set so softplus(bias) is
  // log-uniform in [1e-3, 0.1]; linear and conv layers Uniform(+-1/sqrt(fan_in)).
  static MambaParams create(const MambaConfig& config, std::uint64_t seed);
  std::vector<Param<T>*> parameters();
  // A = -exp(A_log), [d_inner, d_state].
  Tensor<T> state_matrix() const;

  template <typename U>
  MambaParams<U> cast() const;
};

// Depthwise causal convolution over time, zero left padding:
// y[t, c] = bias[c] + sum_k kernel[c, k] * u[t - d_conv + 1 + k, c].
template <typename T>
Tensor<T> depthwise_causal_conv(const Tensor<T>& u, const Tensor<T>& kernel,
                                const Tensor<T>& bias);

// Accumulates kernel/bias gradients and returns dL/du.
template <typename T>
Tensor<T> depthwise_causal_conv_backward(const Tensor<T>& u, const Tensor<T>& kernel,
                                         const Tensor<T>& dy, Tensor<T>& g_kernel,
                                         Tensor<T>& g_bias);

// Selective scan with h_0 = 0:
//   h_t = exp(delta_t * A) * h_{t-1} + delta_t * B_t * u_t
//   y_t = C_t . h_t + D * u_t
// u, delta: [T, d_inner]; A: [d_inner, d_state]; B, C: [T, d_state]; D: [d_inner].
// A non-positive delta is a numeric error.
template <typename T>
Tensor<T> selective_scan(const Tensor<T>& u, const Tensor<T>& delta, const Tensor<T>& A,
                         const Tensor<T>& B, const Tensor<T>& C, const Tensor<T>& D);

template <typename T>
struct ScanGrads {
  Tensor<T> du;
  Tensor<T> ddelta;
  Tensor<T> dA;
  Tensor<T> dB;
  Tensor<T> dC;
  Tensor<T> dD;
};

// Recomputes the hidden states and backpropagates `dy` through the scan.
template <typename T>
ScanGrads<T> selective_scan_backward(const Tensor<T>& u, const Tensor<T>& delta,
                                     const Tensor<T>& A, const Tensor<T>& B, const Tensor<T>& C,
                                     const Tensor<T>& D, const Tensor<T>& dy);

// Intermediate activations of a packed block forward.
template <typename T>
struct MambaCache {
  std::vector<std::size_t> lengths;
  Tensor<T> x;       // block input
  Tensor<T> xs;      // conv input (x half of in_proj)
  Tensor<T> z;       // gate half of in_proj
  Tensor<T> xc;      // conv output
  Tensor<T> xa;      // silu(xc), the scan input
  Tensor<T> dt_raw;
  Tensor<T> dt_pre;  // dt_proj output
  Tensor<T> delta;
  Tensor<T> B;
  Tensor<T> C;
  Tensor<T> A;
  Tensor<T> y;       // scan output
  Tensor<T> g;       // y * silu(z)
};

// One sequence, [T, d_model] -> [T, d_model]. Wrong width -> config error.
template <typename T>
Tensor<T> mamba_block_forward(const Tensor<T>& x, const MambaParams<T>& params);

// Several sequences stacked row-wise; `lengths` gives their row counts.
// Convolution and scan always run per sequence. With `isolate` set the row
// projections do too, making each sequence's output bit-identical to running
// it alone; otherwise they run on the whole stack, which is faster and still
// deterministic for a fixed pack.
template <typename T>
Tensor<T> mamba_block_forward_packed(const Tensor<T>& x, std::span<const std::size_t> lengths,
                                     const MambaParams<T>& params,
                                     MambaCache<T>* cache = nullptr, bool isolate = true);

// Accumulates block parameter gradients (classifier excluded). Returns
// dL/dx when `need_input_grad`, else an empty tensor.
template <typename T>
Tensor<T> mamba_block_backward(const Tensor<T>& dout, const MambaCache<T>& cache,
                               MambaParams<T>& params, bool need_input_grad = false);

// Mean over rows whose mask flag is set; all-masked -> pooling error.
template <typename T>
Tensor<T> masked_mean_pool(const Tensor<T>& seq, std::span<const std::uint8_t> mask);

}  // namespace merc

#endif  // MERC_MAMBA_H_
