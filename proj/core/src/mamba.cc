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

#include "merc/mamba.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "merc/error.h"
#include "merc/rng.h"

namespace merc {

void MambaConfig::validate() const {
  if (d_model == 0 || d_state == 0 || expand == 0 || d_conv == 0 || classes == 0) {
    throw Error(ErrorKind::kConfig, "mamba config sizes must be positive");
  }
}

template <typename T>
MambaParams<T> MambaParams<T>::create(const MambaConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t di = config.d_inner();
  const std::size_t ds = config.d_state;
  const std::size_t rank = config.dt_rank();
  Rng rng(seed);

  MambaParams p;
  p.config = config;
  p.in_proj = LinearLayer<T>::create("in_proj", config.d_model, 2 * di, false, rng);

  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(config.d_conv));
  Tensor<T> cw({di, config.d_conv});
  for (T& v : cw.values()) v = static_cast<T>(rng.uniform(-conv_bound, conv_bound));
  Tensor<T> cb({di});
  for (T& v : cb.values()) v = static_cast<T>(rng.uniform(-conv_bound, conv_bound));
  p.conv_weight = Param<T>("conv.weight", std::move(cw));
  p.conv_bias = Param<T>("conv.bias", std::move(cb));

  p.x_proj = LinearLayer<T>::create("x_proj", di, rank + 2 * ds, false, rng);

  p.dt_proj = LinearLayer<T>::create("dt_proj", rank, di, true, rng);
  const double dt_bound = 1.0 / std::sqrt(static_cast<double>(rank));
  for (T& v : p.dt_proj.weight.value.values()) {
    v = static_cast<T>(rng.uniform(-dt_bound, dt_bound));
  }
  const double log_lo = std::log(1e-3);
  const double log_hi = std::log(0.1);
  for (T& v : p.dt_proj.bias.value.values()) {
    const double dt = std::max(std::exp(rng.uniform(log_lo, log_hi)), 1e-4);
    v = static_cast<T>(dt + std::log(-std::expm1(-dt)));
  }

  Tensor<T> a_log({di, ds});
  for (std::size_t c = 0; c < di; ++c) {
    for (std::size_t n = 0; n < ds; ++n) a_log(c, n) = static_cast<T>(std::log(n + 1.0));
  }
  p.A_log = Param<T>("A_log", std::move(a_log));
  p.D = Param<T>("D", Tensor<T>({di}, T{1}));

  p.out_proj = LinearLayer<T>::create("out_proj", di, config.d_model, false, rng);
  p.classifier = LinearLayer<T>::create("classifier", config.d_model, config.classes, true, rng);
  return p;
}

template <typename T>
std::vector<Param<T>*> MambaParams<T>::parameters() {
  std::vector<Param<T>*> out;
  in_proj.collect(out);
  out.push_back(&conv_weight);
  out.push_back(&conv_bias);
  x_proj.collect(out);
  dt_proj.collect(out);
  out.push_back(&A_log);
  out.push_back(&D);
  out_proj.collect(out);
  classifier.collect(out);
  return out;
}

template <typename T>
Tensor<T> MambaParams<T>::state_matrix() const {
  Tensor<T> a(A_log.value.shape());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -std::exp(A_log.value[i]);
  return a;
}

template <typename T>
template <typename U>
MambaParams<U> MambaParams<T>::cast() const {
  MambaParams<U> out;
  out.config = config;
  out.in_proj = cast_layer<U>(in_proj);
  out.conv_weight = cast_param<U>(conv_weight);
  out.conv_bias = cast_param<U>(conv_bias);
  out.x_proj = cast_layer<U>(x_proj);
  out.dt_proj = cast_layer<U>(dt_proj);
  out.A_log = cast_param<U>(A_log);
  out.D = cast_param<U>(D);
  out.out_proj = cast_layer<U>(out_proj);
  out.classifier = cast_layer<U>(classifier);
  return out;
}

template <typename T>
Tensor<T> depthwise_causal_conv(const Tensor<T>& u, const Tensor<T>& kernel,
                                const Tensor<T>& bias) {
  const std::size_t channels = kernel.rows();
  const std::size_t width = kernel.cols();
  require_matrix(u, channels, "depthwise_causal_conv");
  const std::size_t steps = u.rows();

  // Transposed kernel so the inner loop runs over contiguous channels.
  std::vector<T> wt(width * channels);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < width; ++k) wt[k * channels + c] = kernel(c, k);
  }
  Tensor<T> y(u.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    T* out = y.data() + t * channels;
    for (std::size_t c = 0; c < channels; ++c) out[c] = bias[c];
    for (std::size_t k = 0; k < width; ++k) {
      if (t + k + 1 < width) continue;
      const std::size_t s = t + k + 1 - width;
      const T* in = u.data() + s * channels;
      const T* w = wt.data() + k * channels;
      for (std::size_t c = 0; c < channels; ++c) out[c] += w[c] * in[c];
    }
  }
  return y;
}

template <typename T>
Tensor<T> depthwise_causal_conv_backward(const Tensor<T>& u, const Tensor<T>& kernel,
                                         const Tensor<T>& dy, Tensor<T>& g_kernel,
                                         Tensor<T>& g_bias) {
  const std::size_t channels = kernel.rows();
  const std::size_t width = kernel.cols();
  require_matrix(u, channels, "depthwise_causal_conv_backward input");
  require_matrix(dy, channels, "depthwise_causal_conv_backward grad");
  const std::size_t steps = u.rows();

  std::vector<T> wt(width * channels);
  std::vector<T> gwt(width * channels, T{0});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < width; ++k) wt[k * channels + c] = kernel(c, k);
  }
  Tensor<T> du(u.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    const T* g = dy.data() + t * channels;
    for (std::size_t c = 0; c < channels; ++c) g_bias[c] += g[c];
    for (std::size_t k = 0; k < width; ++k) {
      if (t + k + 1 < width) continue;
      const std::size_t s = t + k + 1 - width;
      const T* in = u.data() + s * channels;
      const T* w = wt.data() + k * channels;
      T* gw = gwt.data() + k * channels;
      T* gin = du.data() + s * channels;
      for (std::size_t c = 0; c < channels; ++c) {
        gw[c] += g[c] * in[c];
        gin[c] += g[c] * w[c];
      }
    }
  }
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t k = 0; k < width; ++k) g_kernel(c, k) += gwt[k * channels + c];
  }
  return du;
}

namespace {

template <typename T>
using RowArray = Eigen::Array<T, 1, Eigen::Dynamic>;

template <typename T>
void check_scan_shapes(const Tensor<T>& u, const Tensor<T>& delta, const Tensor<T>& A,
                       const Tensor<T>& B, const Tensor<T>& C, const Tensor<T>& D) {
  if (A.rank() != 2) throw Error(ErrorKind::kDimension, "selective_scan: A must be rank 2");
  const std::size_t channels = A.rows();
  const std::size_t states = A.cols();
  require_matrix(u, channels, "selective_scan u");
  require_matrix(delta, channels, "selective_scan delta");
  require_matrix(B, states, "selective_scan B");
  require_matrix(C, states, "selective_scan C");
  const std::size_t steps = u.rows();
  if (delta.rows() != steps || B.rows() != steps || C.rows() != steps) {
    throw Error(ErrorKind::kDimension, "selective_scan: u, delta, B, C differ in length");
  }
  if (D.size() != channels) {
    throw Error(ErrorKind::kDimension, "selective_scan: D must have d_inner entries");
  }
  for (const T d : delta.values()) {
    if (!(d > T{0})) {
      throw Error(ErrorKind::kNumeric, "selective_scan: step sizes must be positive");
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> selective_scan(const Tensor<T>& u, const Tensor<T>& delta, const Tensor<T>& A,
                         const Tensor<T>& B, const Tensor<T>& C, const Tensor<T>& D) {
  check_scan_shapes(u, delta, A, B, C, D);
  const std::size_t channels = A.rows();
  const std::size_t states = A.cols();
  const auto n_states = static_cast<Eigen::Index>(states);

  Tensor<T> y(u.shape());
  std::vector<T> h(channels * states, T{0});
  RowArray<T> decay(n_states);
  for (std::size_t t = 0; t < u.rows(); ++t) {
    const T* bt = B.data() + t * states;
    const T* ct = C.data() + t * states;
    const T* dt = delta.data() + t * channels;
    const T* ut = u.data() + t * channels;
    T* yt = y.data() + t * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      decay = (Eigen::Map<const RowArray<T>>(A.data() + c * states, n_states) * dt[c]).exp();
      const T* dc = decay.data();
      const T du = dt[c] * ut[c];
      T* hc = h.data() + c * states;
      T acc = T{0};
#pragma omp simd reduction(+ : acc)
      for (std::size_t n = 0; n < states; ++n) {
        hc[n] = dc[n] * hc[n] + du * bt[n];
        acc += ct[n] * hc[n];
      }
      yt[c] = acc + D[c] * ut[c];
    }
  }
  return y;
}

template <typename T>
ScanGrads<T> selective_scan_backward(const Tensor<T>& u, const Tensor<T>& delta,
                                     const Tensor<T>& A, const Tensor<T>& B, const Tensor<T>& C,
                                     const Tensor<T>& D, const Tensor<T>& dy) {
  check_scan_shapes(u, delta, A, B, C, D);
  require_matrix(dy, A.rows(), "selective_scan_backward dy");
  const std::size_t channels = A.rows();
  const std::size_t states = A.cols();
  const auto n_states = static_cast<Eigen::Index>(states);
  const std::size_t steps = u.rows();
  const std::size_t plane = channels * states;

  // h_t for t = 0..T (h_0 = 0), kept in a scratch buffer reused across calls.
  thread_local std::vector<T> scratch;
  scratch.resize((steps + 1) * plane);
  T* hs = scratch.data();
  std::fill(hs, hs + plane, T{0});
  RowArray<T> decay(n_states);
  for (std::size_t t = 0; t < steps; ++t) {
    const T* bt = B.data() + t * states;
    const T* dt = delta.data() + t * channels;
    const T* ut = u.data() + t * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      decay = (Eigen::Map<const RowArray<T>>(A.data() + c * states, n_states) * dt[c]).exp();
      const T* dc = decay.data();
      const T du = dt[c] * ut[c];
      const T* hp = hs + t * plane + c * states;
      T* hn = hs + (t + 1) * plane + c * states;
#pragma omp simd
      for (std::size_t n = 0; n < states; ++n) hn[n] = dc[n] * hp[n] + du * bt[n];
    }
  }

  ScanGrads<T> g;
  g.du = Tensor<T>(u.shape());
  g.ddelta = Tensor<T>(delta.shape());
  g.dA = Tensor<T>(A.shape());
  g.dB = Tensor<T>(B.shape());
  g.dC = Tensor<T>(C.shape());
  g.dD = Tensor<T>(D.shape());

  // gh = dL/dh_t, carried backwards through the decay.
  std::vector<T> gh(plane, T{0});
  for (std::size_t t = steps; t-- > 0;) {
    const T* bt = B.data() + t * states;
    const T* ct = C.data() + t * states;
    T* gbt = g.dB.data() + t * states;
    T* gct = g.dC.data() + t * states;
    const T* dt = delta.data() + t * channels;
    const T* ut = u.data() + t * channels;
    const T* gyt = dy.data() + t * channels;
    T* gut = g.du.data() + t * channels;
    T* gdt = g.ddelta.data() + t * channels;
    for (std::size_t c = 0; c < channels; ++c) {
      const T* ac = A.data() + c * states;
      decay = (Eigen::Map<const RowArray<T>>(ac, n_states) * dt[c]).exp();
      const T* dc = decay.data();
      const T* hp = hs + t * plane + c * states;
      const T* hc = hs + (t + 1) * plane + c * states;
      T* gac = g.dA.data() + c * states;
      T* ghc = gh.data() + c * states;
      const T gy = gyt[c];
      const T du = dt[c] * ut[c];
      T via_decay = T{0};
      T via_input = T{0};
#pragma omp simd reduction(+ : via_decay, via_input)
      for (std::size_t n = 0; n < states; ++n) {
        const T gn = ghc[n] + gy * ct[n];
        gct[n] += gy * hc[n];
        const T p = gn * hp[n] * dc[n];
        via_decay += p * ac[n];
        via_input += gn * bt[n];
        gac[n] += p * dt[c];
        gbt[n] += du * gn;
        ghc[n] = gn * dc[n];
      }
      g.dD[c] += gy * ut[c];
      gdt[c] += via_decay + via_input * ut[c];
      gut[c] += gy * D[c] + via_input * dt[c];
    }
  }
  return g;
}

namespace {

template <typename T>
void check_block_input(const Tensor<T>& x, const MambaParams<T>& params) {
  if (x.rank() != 2 || x.cols() != params.config.d_model) {
    throw Error(ErrorKind::kConfig, "mamba block expects width " +
                                        std::to_string(params.config.d_model) + ", got " +
                                        shape_string(x.shape()));
  }
}

// Rows [begin, begin + count) of a rank-2 tensor.
template <typename T>
Tensor<T> row_block(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  const std::size_t cols = x.cols();
  std::vector<T> v(x.data() + begin * cols, x.data() + (begin + count) * cols);
  return Tensor<T>({count, cols}, std::move(v));
}

template <typename T>
void write_rows(Tensor<T>& dst, std::size_t begin, const Tensor<T>& src) {
  std::copy(src.values().begin(), src.values().end(), dst.data() + begin * dst.cols());
}

template <typename T>
void add_rows(Tensor<T>& dst, std::size_t begin, const Tensor<T>& src) {
  T* out = dst.data() + begin * dst.cols();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] += src[i];
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// GEMM rounding depends on a row's position within the call.
template <typename T>
Tensor<T> sequence_linear(const Tensor<T>& x, std::span<const std::size_t> lengths,
                          const LinearLayer<T>& layer, bool isolate) {
  if (!isolate || lengths.size() == 1) return linear_forward(x, layer);
  Tensor<T> out({x.rows(), layer.out_features()});
  std::size_t begin = 0;
  for (const std::size_t len : lengths) {
    write_rows(out, begin, linear_forward(row_block(x, begin, len), layer));
    begin += len;
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> mamba_block_forward_packed(const Tensor<T>& x, std::span<const std::size_t> lengths,
                                     const MambaParams<T>& params, MambaCache<T>* cache,
                                     bool isolate) {
  check_block_input(x, params);
  std::size_t total = 0;
  for (const std::size_t len : lengths) {
    if (len == 0) throw Error(ErrorKind::kBatch, "mamba block: empty sequence in batch");
    total += len;
  }
  if (total != x.rows()) {
    throw Error(ErrorKind::kBatch, "mamba block: sequence lengths do not cover the input rows");
  }
  const MambaConfig& cfg = params.config;
  const std::size_t di = cfg.d_inner();
  const std::size_t rank = cfg.dt_rank();
  const std::size_t ds = cfg.d_state;

  MambaCache<T> local;
  MambaCache<T>& c = cache ? *cache : local;
  c.lengths.assign(lengths.begin(), lengths.end());
  c.x = x;
  const Tensor<T> xz = sequence_linear(x, lengths, params.in_proj, isolate);
  c.xs = slice_cols(xz, 0, di);
  c.z = slice_cols(xz, di, di);

  c.xc = Tensor<T>(c.xs.shape());
  std::size_t begin = 0;
  for (const std::size_t len : lengths) {
    write_rows(c.xc, begin,
               depthwise_causal_conv(row_block(c.xs, begin, len), params.conv_weight.value,
                                     params.conv_bias.value));
    begin += len;
  }
  c.xa = silu(c.xc);

  const Tensor<T> dbc = sequence_linear(c.xa, lengths, params.x_proj, isolate);
  c.dt_raw = slice_cols(dbc, 0, rank);
  c.B = slice_cols(dbc, rank, ds);
  c.C = slice_cols(dbc, rank + ds, ds);
  c.dt_pre = sequence_linear(c.dt_raw, lengths, params.dt_proj, isolate);
  c.delta = softplus(c.dt_pre);
  c.A = params.state_matrix();

  c.y = Tensor<T>(c.xa.shape());
  begin = 0;
  for (const std::size_t len : lengths) {
    write_rows(c.y, begin,
               selective_scan(row_block(c.xa, begin, len), row_block(c.delta, begin, len), c.A,
                              row_block(c.B, begin, len), row_block(c.C, begin, len),
                              params.D.value));
    begin += len;
  }
  c.g = mul(c.y, silu(c.z));
  return sequence_linear(c.g, lengths, params.out_proj, isolate);
}

template <typename T>
Tensor<T> mamba_block_forward(const Tensor<T>& x, const MambaParams<T>& params) {
  check_block_input(x, params);
  const std::size_t len = x.rows();
  return mamba_block_forward_packed(x, std::span<const std::size_t>(&len, 1), params);
}

template <typename T>
Tensor<T> mamba_block_backward(const Tensor<T>& dout, const MambaCache<T>& c,
                               MambaParams<T>& params, bool need_input_grad) {
  const MambaConfig& cfg = params.config;
  const std::size_t di = cfg.d_inner();
  const std::size_t rank = cfg.dt_rank();
  const std::size_t ds = cfg.d_state;

  const Tensor<T> gg = linear_backward(c.g, dout, params.out_proj);
  const Tensor<T> gy = mul(gg, silu(c.z));
  const Tensor<T> gz = silu_backward(c.z, mul(gg, c.y));

  Tensor<T> gxa(c.xa.shape());
  Tensor<T> gdelta(c.delta.shape());
  Tensor<T> gB(c.B.shape());
  Tensor<T> gC(c.C.shape());
  Tensor<T> gA(c.A.shape());
  std::size_t begin = 0;
  for (const std::size_t len : c.lengths) {
    const ScanGrads<T> sg = selective_scan_backward(
        row_block(c.xa, begin, len), row_block(c.delta, begin, len), c.A,
        row_block(c.B, begin, len), row_block(c.C, begin, len), params.D.value,
        row_block(gy, begin, len));
    write_rows(gxa, begin, sg.du);
    write_rows(gdelta, begin, sg.ddelta);
    write_rows(gB, begin, sg.dB);
    write_rows(gC, begin, sg.dC);
    for (std::size_t i = 0; i < gA.size(); ++i) gA[i] += sg.dA[i];
    for (std::size_t i = 0; i < di; ++i) params.D.grad[i] += sg.dD[i];
    begin += len;
  }
  // dA/dA_log = -exp(A_log) = A.
  for (std::size_t i = 0; i < gA.size(); ++i) params.A_log.grad[i] += gA[i] * c.A[i];

  const Tensor<T> gdt_pre = softplus_backward(c.dt_pre, gdelta);
  const Tensor<T> gdt_raw = linear_backward(c.dt_raw, gdt_pre, params.dt_proj);
  Tensor<T> gdbc({c.xa.rows(), rank + 2 * ds});
  assign_cols(gdbc, 0, gdt_raw);
  assign_cols(gdbc, rank, gB);
  assign_cols(gdbc, rank + ds, gC);
  const Tensor<T> gxa_proj = linear_backward(c.xa, gdbc, params.x_proj);
  for (std::size_t i = 0; i < gxa.size(); ++i) gxa[i] += gxa_proj[i];

  const Tensor<T> gxc = silu_backward(c.xc, gxa);
  Tensor<T> gxs(c.xs.shape());
  begin = 0;
  for (const std::size_t len : c.lengths) {
    add_rows(gxs, begin,
             depthwise_causal_conv_backward(row_block(c.xs, begin, len), params.conv_weight.value,
                                            row_block(gxc, begin, len), params.conv_weight.grad,
                                            params.conv_bias.grad));
    begin += len;
  }

  Tensor<T> gxz({c.x.rows(), 2 * di});
  assign_cols(gxz, 0, gxs);
  assign_cols(gxz, di, gz);
  return linear_backward(c.x, gxz, params.in_proj, need_input_grad);
}

template <typename T>
Tensor<T> masked_mean_pool(const Tensor<T>& seq, std::span<const std::uint8_t> mask) {
  if (seq.rank() != 2 || mask.size() != seq.rows()) {
    throw Error(ErrorKind::kDimension, "masked_mean_pool: mask length differs from sequence");
  }
  Tensor<T> out({seq.cols()});
  std::size_t valid = 0;
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    if (!mask[t]) continue;
    const auto row = seq.row(t);
    for (std::size_t j = 0; j < seq.cols(); ++j) out[j] += row[j];
    ++valid;
  }
  if (valid == 0) throw Error(ErrorKind::kPooling, "masked_mean_pool: every position is masked");
  const T scale = T{1} / static_cast<T>(valid);
  for (T& v : out.values()) v *= scale;
  return out;
}

#define MERC_INSTANTIATE(T)                                                                  \
  template struct MambaParams<T>;                                                            \
  template Tensor<T> depthwise_causal_conv(const Tensor<T>&, const Tensor<T>&,               \
                                           const Tensor<T>&);                                \
  template Tensor<T> depthwise_causal_conv_backward(const Tensor<T>&, const Tensor<T>&,      \
                                                    const Tensor<T>&, Tensor<T>&, Tensor<T>&); \
  template Tensor<T> selective_scan(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                    const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template ScanGrads<T> selective_scan_backward(const Tensor<T>&, const Tensor<T>&,          \
                                                const Tensor<T>&, const Tensor<T>&,          \
                                                const Tensor<T>&, const Tensor<T>&,          \
                                                const Tensor<T>&);                           \
  template Tensor<T> mamba_block_forward(const Tensor<T>&, const MambaParams<T>&);           \
  template Tensor<T> mamba_block_forward_packed(const Tensor<T>&, std::span<const std::size_t>, \
                                                const MambaParams<T>&, MambaCache<T>*, bool);      \
  template Tensor<T> mamba_block_backward(const Tensor<T>&, const MambaCache<T>&,            \
                                          MambaParams<T>&, bool);                            \
  template Tensor<T> masked_mean_pool(const Tensor<T>&, std::span<const std::uint8_t>);

MERC_INSTANTIATE(float)
MERC_INSTANTIATE(double)
#undef MERC_INSTANTIATE

template MambaParams<double> MambaParams<float>::cast<double>() const;
template MambaParams<float> MambaParams<double>::cast<float>() const;
template MambaParams<float> MambaParams<float>::cast<float>() const;

}  // namespace merc
