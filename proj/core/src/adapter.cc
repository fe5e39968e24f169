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

#include "merc/adapter.h"

#include <numeric>
#include <string>

#include "merc/error.h"
#include "merc/loss.h"
#include "merc/optim.h"
#include "merc/param_io.h"

namespace merc {

template <typename T>
AdapterParams<T> AdapterParams<T>::create(std::uint64_t seed) {
  Rng rng(seed);
  AdapterParams p;
  p.linear1 = LinearLayer<T>::create("linear1", kAdapterInput, kAdapterHidden1, true, rng);
  p.bn1 = BatchNormLayer<T>::create("bn1", kAdapterHidden1);
  p.linear2 = LinearLayer<T>::create("linear2", kAdapterHidden1, kAdapterHidden2, true, rng);
  p.bn2 = BatchNormLayer<T>::create("bn2", kAdapterHidden2);
  p.linear3 = LinearLayer<T>::create("linear3", kAdapterHidden2, kAdapterClasses, true, rng);
  return p;
}

template <typename T>
std::vector<Param<T>*> AdapterParams<T>::parameters() {
  std::vector<Param<T>*> out;
  linear1.collect(out);
  bn1.collect(out);
  linear2.collect(out);
  bn2.collect(out);
  linear3.collect(out);
  return out;
}

template <typename T>
template <typename U>
AdapterParams<U> AdapterParams<T>::cast() const {
  AdapterParams<U> out;
  out.linear1 = cast_layer<U>(linear1);
  out.bn1 = cast_layer<U>(bn1);
  out.linear2 = cast_layer<U>(linear2);
  out.bn2 = cast_layer<U>(bn2);
  out.linear3 = cast_layer<U>(linear3);
  out.dropout_rate = dropout_rate;
  return out;
}

template <typename T>
AdapterOutput<T> adapter_forward(const Tensor<T>& x, AdapterParams<T>& params, bool training,
                                 Rng& rng, AdapterCache<T>* cache) {
  require_matrix(x, kAdapterInput, "adapter input");
  AdapterCache<T> local;
  AdapterCache<T>& c = cache ? *cache : local;
  const double rate = params.dropout_rate;

  c.x = x;
  c.a1 = batchnorm_forward(linear_forward(x, params.linear1), params.bn1, training, &c.bn1);
  c.d1 = dropout_forward(relu(c.a1), rate, rng, training, &c.drop1);
  c.a2 = batchnorm_forward(linear_forward(c.d1, params.linear2), params.bn2, training, &c.bn2);
  AdapterOutput<T> out;
  out.penultimate = relu(c.a2);
  c.d2 = dropout_forward(out.penultimate, rate, rng, training, &c.drop2);
  out.logits = linear_forward(c.d2, params.linear3);
  return out;
}

template <typename T>
AdapterOutput<T> adapter_forward(const Tensor<T>& x, const AdapterParams<T>& params) {
  require_matrix(x, kAdapterInput, "adapter input");
  const Tensor<T> r1 = relu(batchnorm_eval(linear_forward(x, params.linear1), params.bn1));
  AdapterOutput<T> out;
  out.penultimate = relu(batchnorm_eval(linear_forward(r1, params.linear2), params.bn2));
  out.logits = linear_forward(out.penultimate, params.linear3);
  return out;
}

template <typename T>
Tensor<T> adapter_backward(const Tensor<T>& dlogits, const AdapterCache<T>& c,
                           AdapterParams<T>& params) {
  Tensor<T> g = linear_backward(c.d2, dlogits, params.linear3);
  g = relu_backward(c.a2, dropout_backward(g, c.drop2));
  g = batchnorm_backward(g, c.bn2, params.bn2);
  g = linear_backward(c.d1, g, params.linear2);
  g = relu_backward(c.a1, dropout_backward(g, c.drop1));
  g = batchnorm_backward(g, c.bn1, params.bn1);
  return linear_backward(c.x, g, params.linear1);
}

#define MERC_INSTANTIATE(T)                                                                 \
  template struct AdapterParams<T>;                                                         \
  template AdapterOutput<T> adapter_forward(const Tensor<T>&, AdapterParams<T>&, bool, Rng&, \
                                            AdapterCache<T>*);                              \
  template AdapterOutput<T> adapter_forward(const Tensor<T>&, const AdapterParams<T>&);     \
  template Tensor<T> adapter_backward(const Tensor<T>&, const AdapterCache<T>&,             \
                                      AdapterParams<T>&);

MERC_INSTANTIATE(float)
MERC_INSTANTIATE(double)
#undef MERC_INSTANTIATE

template AdapterParams<double> AdapterParams<float>::cast<double>() const;
template AdapterParams<float> AdapterParams<double>::cast<float>() const;
template AdapterParams<float> AdapterParams<float>::cast<float>() const;

void AdapterTrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "adapter lr must be positive");
  if (!(weight_decay >= 0.0)) {
    throw Error(ErrorKind::kConfig, "adapter weight_decay must be non-negative");
  }
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    throw Error(ErrorKind::kConfig, "adapter plateau_factor must lie in (0, 1)");
  }
  if (plateau_patience < 1 || early_stop_patience < 1) {
    throw Error(ErrorKind::kConfig, "adapter patience values must be >= 1");
  }
  if (batch_size < 2) throw Error(ErrorKind::kConfig, "adapter batch_size must be >= 2");
  if (max_epochs < 1) throw Error(ErrorKind::kConfig, "adapter max_epochs must be >= 1");
}

namespace {

void check_set(const LabeledSet& set, const char* what) {
  if (set.size() == 0) throw Error(ErrorKind::kData, std::string(what) + " split is empty");
  require_matrix(set.x, kAdapterInput, what);
  if (set.x.rows() != set.y.size()) {
    throw Error(ErrorKind::kData, std::string(what) + ": " + std::to_string(set.x.rows()) +
                                      " embeddings but " + std::to_string(set.y.size()) +
                                      " labels");
  }
  for (const int label : set.y) {
    if (label < 0 || label >= static_cast<int>(kAdapterClasses)) {
      throw Error(ErrorKind::kLabel,
                  std::string(what) + ": class index " + std::to_string(label) + " out of range");
    }
  }
}

}  // namespace

EvalMetrics evaluate_adapter(const AdapterParams<float>& params, const LabeledSet& set) {
  check_set(set, "evaluation");
  const AdapterOutput<float> out = adapter_forward(set.x, params);
  const std::vector<int> preds = predict_classes(out.logits);
  return score_predictions(set.y, preds, kAdapterClasses);
}

AdapterTrainResult train_adapter(const LabeledSet& train, const LabeledSet& val,
                                 const AdapterTrainConfig& cfg) {
  cfg.validate();
  check_set(train, "train");
  check_set(val, "validation");

  AdapterParams<float> params = AdapterParams<float>::create(cfg.seed);
  AdapterParams<float> best = params;
  std::vector<Param<float>*> plist = params.parameters();
  OptimConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;
  OptimState<float> state(oc);
  const std::vector<double> weights(kAdapterClasses, 1.0);

  LoopHooks hooks;
  hooks.train_epoch = [&](int epoch, double lr) {
    state.config.lr = lr;
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t seen = 0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      if (n < 2) continue;
      const std::span<const std::size_t> idx(order.data() + start, n);
      const Tensor<float> xb = gather_rows(train.x, idx);
      std::vector<int> yb(n);
      for (std::size_t i = 0; i < n; ++i) yb[i] = train.y[idx[i]];

      AdapterCache<float> cache;
      const AdapterOutput<float> out = adapter_forward(xb, params, true, rng, &cache);
      const LossResult<float> loss = weighted_smoothed_ce(out.logits, yb, weights, 0.0);
      zero_grads(plist);
      adapter_backward(loss.grad, cache, params);
      adam_step(plist, state);
      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(n);
      seen += n;
    }
    return seen == 0 ? 0.0 : loss_sum / static_cast<double>(seen);
  };
  hooks.evaluate = [&] { return evaluate_adapter(params, val); };
  hooks.on_best = [&](int) { best = params; };

  LoopConfig loop;
  loop.max_epochs = cfg.max_epochs;
  loop.early_stop_patience = cfg.early_stop_patience;
  loop.selection = SelectionMetric::kMacroF1;
  loop.initial_lr = cfg.lr;
  loop.plateau = PlateauConfig{cfg.plateau_factor, cfg.plateau_patience};

  AdapterTrainResult result;
  result.history = run_training_loop(loop, hooks);
  result.params = std::move(best);
  return result;
}

Tensor<float> extract_adapted(const Tensor<float>& x, const AdapterParams<float>& params) {
  return adapter_forward(x, params).penultimate;
}

namespace {

void append_bn_stats(std::vector<NamedTensor>& out, const std::string& name,
                     const BatchNormLayer<float>& bn) {
  out.push_back(to_named(name + ".running_mean", bn.running_mean));
  out.push_back(to_named(name + ".running_var", bn.running_var));
}

void load_bn_stats(std::span<const NamedTensor> tensors, const std::string& name,
                   BatchNormLayer<float>& bn) {
  const Shape shape{bn.features()};
  const Tensor<float> mean = load_tensor(tensors, name + ".running_mean", shape);
  const Tensor<float> var = load_tensor(tensors, name + ".running_var", shape);
  bn.running_mean.assign(mean.values().begin(), mean.values().end());
  bn.running_var.assign(var.values().begin(), var.values().end());
}

}  // namespace

void save_adapter(const AdapterParams<float>& params, const std::filesystem::path& path) {
  AdapterParams<float> copy = params;
  std::vector<NamedTensor> tensors;
  append_params(tensors, copy.parameters());
  append_bn_stats(tensors, "bn1", params.bn1);
  append_bn_stats(tensors, "bn2", params.bn2);
  write_adp1(tensors, path);
}

AdapterParams<float> load_adapter(const std::filesystem::path& path) {
  const std::vector<NamedTensor> tensors = read_adp1(path);
  AdapterParams<float> params = AdapterParams<float>::create(0);
  load_params(tensors, params.parameters());
  load_bn_stats(tensors, "bn1", params.bn1);
  load_bn_stats(tensors, "bn2", params.bn2);
  return params;
}

}  // namespace merc
