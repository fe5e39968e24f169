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

#include "merc/fusion.h"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "merc/error.h"
#include "merc/loss.h"
#include "merc/optim.h"
#include "merc/param_io.h"
#include "merc/rng.h"

namespace merc {

ModalitySet ModalitySet::parse(const std::string& spec) {
  ModalitySet m;
  std::size_t begin = 0;
  bool any = false;
  while (begin <= spec.size()) {
    std::size_t end = spec.find('+', begin);
    if (end == std::string::npos) end = spec.size();
    std::string part;
    for (std::size_t i = begin; i < end; ++i) {
      const auto ch = static_cast<unsigned char>(spec[i]);
      if (!std::isspace(ch)) part.push_back(static_cast<char>(std::toupper(ch)));
    }
    bool* flag = nullptr;
    if (part == "T" || part == "TEXT") {
      flag = &m.text;
    } else if (part == "V" || part == "FACE" || part == "VISUAL") {
      flag = &m.face;
    } else if (part == "A" || part == "SPEAKER" || part == "AUDIO") {
      flag = &m.speaker;
    }
    if (flag == nullptr || *flag) {
      throw Error(ErrorKind::kConfig, "invalid modality set '" + spec +
                                          "' (expected a '+'-joined subset of T, V, A)");
    }
    *flag = true;
    any = true;
    begin = end + 1;
  }
  if (!any) throw Error(ErrorKind::kConfig, "empty modality set");
  return m;
}

std::string ModalitySet::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(text, "T");
  add(face, "V");
  add(speaker, "A");
  return out;
}

std::size_t ModalitySet::d_model() const {
  return (text ? kTextDim : 0) + (face ? kFaceDim : 0) + (speaker ? kSpeakerDim : 0);
}

std::vector<std::size_t> align_tokens_to_frames(std::size_t tokens, std::size_t frames) {
  if (tokens == 0 || frames == 0) {
    throw Error(ErrorKind::kAlignment, "token-frame alignment needs at least one token and frame");
  }
  if (tokens < frames) {
    throw Error(ErrorKind::kAlignment, "fewer tokens (" + std::to_string(tokens) +
                                           ") than frames (" + std::to_string(frames) + ")");
  }
  const std::size_t base = tokens / frames;
  const std::size_t extra = tokens % frames;
  std::vector<std::size_t> sizes(frames, base);
  for (std::size_t i = 0; i < extra; ++i) sizes[i] += 1;
  return sizes;
}

std::size_t FusedSequence::valid_length() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

namespace {

void check_width(const Tensor<float>& t, std::size_t width, const char* what) {
  if (!t.empty()) require_matrix(t, width, what);
}

void copy_into(std::span<float> dst, std::span<const float> src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

FusedSequence fuse_utterance(const UtteranceFeatures& f, const ModalitySet& m,
                             std::string utterance_id, int label) {
  check_width(f.text_tokens, kTextDim, "text tokens");
  check_width(f.face_frames, kFaceDim, "face frames");
  if (!f.speaker.empty() && f.speaker.size() != kSpeakerDim) {
    throw Error(ErrorKind::kDimension, "speaker embedding must have 128 values, got " +
                                           std::to_string(f.speaker.size()));
  }
  auto require = [&](bool present, const char* what) {
    if (!present) {
      throw Error(ErrorKind::kInput, "utterance '" + utterance_id + "': modality set " +
                                         m.to_string() + " needs " + what);
    }
  };
  if (m.text) require(!f.text_tokens.empty(), "text tokens");
  if (m.face) require(!f.face_frames.empty(), "face frames");
  if (m.speaker) require(!f.speaker.empty(), "a speaker embedding");
  if (!m.text && !m.face && !m.speaker) {
    throw Error(ErrorKind::kConfig, "empty modality set");
  }

  const std::size_t d = m.d_model();
  std::size_t rows = 1;
  std::vector<std::size_t> frame_of;  // frame index per output row
  if (m.text) {
    rows = f.text_tokens.rows();
    if (m.face) {
      const std::size_t frames = std::min(f.face_frames.rows(), rows);
      const std::vector<std::size_t> groups = align_tokens_to_frames(rows, frames);
      for (std::size_t fi = 0; fi < groups.size(); ++fi) frame_of.insert(frame_of.end(), groups[fi], fi);
    }
  } else if (m.face) {
    rows = f.face_frames.rows();
    frame_of.resize(rows);
    std::iota(frame_of.begin(), frame_of.end(), std::size_t{0});
  }

  FusedSequence seq;
  seq.utterance_id = std::move(utterance_id);
  seq.label = label;
  seq.tokens = Tensor<float>({rows, d});
  seq.mask.assign(rows, 1);
  for (std::size_t t = 0; t < rows; ++t) {
    std::span<float> out = seq.tokens.row(t);
    std::size_t col = 0;
    if (m.text) {
      copy_into(out.subspan(col, kTextDim), f.text_tokens.row(t));
      col += kTextDim;
    }
    if (m.face) {
      copy_into(out.subspan(col, kFaceDim), f.face_frames.row(frame_of[t]));
      col += kFaceDim;
    }
    if (m.speaker) copy_into(out.subspan(col, kSpeakerDim), f.speaker);
  }
  return seq;
}

FusedSequence pad_sequence(const FusedSequence& seq, std::size_t length) {
  const std::size_t rows = seq.tokens.rows();
  if (length < rows) throw Error(ErrorKind::kBatch, "pad_sequence: target shorter than input");
  FusedSequence out;
  out.utterance_id = seq.utterance_id;
  out.label = seq.label;
  out.tokens = Tensor<float>({length, seq.tokens.cols()});
  std::copy(seq.tokens.values().begin(), seq.tokens.values().end(), out.tokens.data());
  out.mask = seq.mask;
  out.mask.resize(length, 0);
  return out;
}

namespace {

std::size_t batch_width(std::span<const FusedSequence> batch) {
  if (batch.empty()) throw Error(ErrorKind::kBatch, "empty batch");
  const std::size_t d = batch.front().d_model();
  for (const FusedSequence& s : batch) {
    if (s.tokens.rank() != 2 || s.d_model() != d) {
      throw Error(ErrorKind::kBatch, "batch mixes token widths " + std::to_string(d) + " and " +
                                         shape_string(s.tokens.shape()));
    }
    if (s.mask.size() != s.tokens.rows()) {
      throw Error(ErrorKind::kBatch, "sequence '" + s.utterance_id + "' mask length mismatch");
    }
  }
  return d;
}

}  // namespace

template <typename T>
Tensor<T> fusion_forward(std::span<const FusedSequence> batch, const MambaParams<T>& params) {
  const std::size_t d = batch_width(batch);
  std::size_t longest = 0;
  for (const FusedSequence& s : batch) longest = std::max(longest, s.tokens.rows());

  Tensor<T> x({batch.size() * longest, d});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto src = batch[i].tokens.values();
    std::copy(src.begin(), src.end(), x.data() + i * longest * d);
  }
  const std::vector<std::size_t> lengths(batch.size(), longest);
  const Tensor<T> out = mamba_block_forward_packed(x, lengths, params);

  Tensor<T> pooled({batch.size(), d});
  Tensor<T> rows({longest, d});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::copy(out.data() + i * longest * d, out.data() + (i + 1) * longest * d, rows.data());
    std::vector<std::uint8_t> mask = batch[i].mask;
    mask.resize(longest, 0);
    const Tensor<T> p = masked_mean_pool(rows, mask);
    std::copy(p.values().begin(), p.values().end(), pooled.row(i).begin());
  }
  // One row at a time so identical sequences get identical logits.
  Tensor<T> logits({batch.size(), params.config.classes});
  Tensor<T> one({1, d});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::copy(pooled.row(i).begin(), pooled.row(i).end(), one.data());
    const Tensor<T> l = linear_forward(one, params.classifier);
    std::copy(l.values().begin(), l.values().end(), logits.row(i).begin());
  }
  return logits;
}

template Tensor<float> fusion_forward(std::span<const FusedSequence>, const MambaParams<float>&);
template Tensor<double> fusion_forward(std::span<const FusedSequence>,
                                       const MambaParams<double>&);

void FusionTrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorKind::kConfig, "fusion lr must be positive");
  if (!(weight_decay >= 0.0)) {
    throw Error(ErrorKind::kConfig, "fusion weight_decay must be non-negative");
  }
  if (batch_size < 1) throw Error(ErrorKind::kConfig, "fusion batch_size must be >= 1");
  if (max_epochs < 1) throw Error(ErrorKind::kConfig, "fusion max_epochs must be >= 1");
  if (early_stop_patience < 1) {
    throw Error(ErrorKind::kConfig, "fusion early_stop_patience must be >= 1");
  }
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw Error(ErrorKind::kConfig, "label_smoothing must lie in [0, 1)");
  }
  for (const double w : class_weights) {
    if (!(w > 0.0)) throw Error(ErrorKind::kConfig, "class weights must be positive");
  }
  if (d_state == 0 || expand == 0 || d_conv == 0) {
    throw Error(ErrorKind::kConfig, "mamba sizes must be positive");
  }
}

std::vector<double> FusionTrainConfig::resolved_weights(const EmotionScheme& scheme) const {
  if (!class_weights.empty()) {
    if (class_weights.size() != scheme.size()) {
      throw Error(ErrorKind::kConfig, "class_weights has " +
                                          std::to_string(class_weights.size()) +
                                          " entries, scheme " + scheme.name() + " has " +
                                          std::to_string(scheme.size()) + " classes");
    }
    return class_weights;
  }
  if (scheme.name() == "meld7") return meld_class_weights();
  return std::vector<double>(scheme.size(), 1.0);
}

namespace {

void check_split(std::span<const FusedSequence> data, std::size_t width, std::size_t classes,
                 const char* what) {
  if (data.empty()) throw Error(ErrorKind::kData, std::string(what) + " split is empty");
  for (const FusedSequence& s : data) {
    if (s.tokens.rank() != 2 || s.d_model() != width) {
      throw Error(ErrorKind::kBatch, std::string(what) + ": sequence '" + s.utterance_id +
                                         "' has width " + shape_string(s.tokens.shape()) +
                                         ", expected " + std::to_string(width));
    }
    if (s.label < 0 || s.label >= static_cast<int>(classes)) {
      throw Error(ErrorKind::kLabel, std::string(what) + ": sequence '" + s.utterance_id +
                                         "' has class index " + std::to_string(s.label) +
                                         " outside [0, " + std::to_string(classes) + ")");
    }
    if (s.valid_length() == 0) {
      throw Error(ErrorKind::kPooling, "sequence '" + s.utterance_id + "' has no valid tokens");
    }
  }
}

}  // namespace

std::vector<int> predict_fusion(std::span<const FusedSequence> data,
                                const MambaParams<float>& params, std::size_t batch_size) {
  std::vector<int> preds;
  preds.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, data.size() - start);
    const std::vector<int> p = predict_classes(fusion_forward(data.subspan(start, n), params));
    preds.insert(preds.end(), p.begin(), p.end());
  }
  return preds;
}

EvalMetrics evaluate_fusion(std::span<const FusedSequence> data, const MambaParams<float>& params,
                            std::size_t batch_size) {
  const std::vector<int> preds = predict_fusion(data, params, batch_size);
  std::vector<int> golds;
  golds.reserve(data.size());
  for (const FusedSequence& s : data) golds.push_back(s.label);
  return score_predictions(golds, preds, params.config.classes);
}

FusionTrainResult train_fusion(std::span<const FusedSequence> train,
                               std::span<const FusedSequence> val, const EmotionScheme& scheme,
                               const FusionTrainConfig& cfg) {
  cfg.validate();
  const std::vector<double> weights = cfg.resolved_weights(scheme);
  if (train.empty()) throw Error(ErrorKind::kData, "train split is empty");
  const std::size_t d = train.front().d_model();
  check_split(train, d, scheme.size(), "train");
  check_split(val, d, scheme.size(), "validation");

  MambaConfig mc;
  mc.d_model = d;
  mc.d_state = cfg.d_state;
  mc.expand = cfg.expand;
  mc.d_conv = cfg.d_conv;
  mc.classes = scheme.size();
  MambaParams<float> params = MambaParams<float>::create(mc, cfg.seed);
  MambaParams<float> best = params;
  std::vector<Param<float>*> plist = params.parameters();
  OptimConfig oc;
  oc.lr = cfg.lr;
  oc.weight_decay = cfg.weight_decay;
  OptimState<float> state(oc);

  LoopHooks hooks;
  hooks.train_epoch = [&](int epoch, double lr) {
    state.config.lr = lr;
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::vector<std::size_t> lengths(n);
      std::vector<int> labels(n);
      std::size_t rows = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const FusedSequence& s = train[order[start + i]];
        lengths[i] = s.valid_length();
        labels[i] = s.label;
        rows += lengths[i];
      }
      Tensor<float> x({rows, d});
      std::size_t at = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const FusedSequence& s = train[order[start + i]];
        std::copy(s.tokens.data(), s.tokens.data() + lengths[i] * d, x.data() + at * d);
        at += lengths[i];
      }

      MambaCache<float> cache;
      const Tensor<float> out = mamba_block_forward_packed(x, lengths, params, &cache, false);
      Tensor<float> pooled({n, d});
      at = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const float scale = 1.0f / static_cast<float>(lengths[i]);
        float* p = pooled.data() + i * d;
        for (std::size_t r = 0; r < lengths[i]; ++r) {
          const float* o = out.data() + (at + r) * d;
          for (std::size_t j = 0; j < d; ++j) p[j] += o[j];
        }
        for (std::size_t j = 0; j < d; ++j) p[j] *= scale;
        at += lengths[i];
      }
      const Tensor<float> logits = linear_forward(pooled, params.classifier);
      const LossResult<float> loss =
          weighted_smoothed_ce(logits, labels, weights, cfg.label_smoothing);

      zero_grads(plist);
      const Tensor<float> gpooled = linear_backward(pooled, loss.grad, params.classifier);
      Tensor<float> gout({rows, d});
      at = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const float scale = 1.0f / static_cast<float>(lengths[i]);
        const float* g = gpooled.data() + i * d;
        for (std::size_t r = 0; r < lengths[i]; ++r) {
          float* o = gout.data() + (at + r) * d;
          for (std::size_t j = 0; j < d; ++j) o[j] = g[j] * scale;
        }
        at += lengths[i];
      }
      mamba_block_backward(gout, cache, params, false);
      adamw_step(plist, state);
      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(n);
    }
    return loss_sum / static_cast<double>(train.size());
  };
  hooks.evaluate = [&] { return evaluate_fusion(val, params); };
  hooks.on_best = [&](int) { best = params; };

  LoopConfig loop;
  loop.max_epochs = cfg.max_epochs;
  loop.early_stop_patience = cfg.early_stop_patience;
  loop.selection = SelectionMetric::kWeightedF1;
  loop.initial_lr = cfg.lr;

  FusionTrainResult result;
  result.history = run_training_loop(loop, hooks);
  result.params = std::move(best);
  return result;
}

void save_fusion(const MambaParams<float>& params, const ModalitySet& modalities,
                 const std::filesystem::path& path) {
  MambaParams<float> copy = params;
  std::vector<NamedTensor> tensors;
  append_params(tensors, copy.parameters());
  const MambaConfig& c = params.config;
  tensors.push_back(to_named(
      "meta.config", std::vector<float>{static_cast<float>(c.d_model), static_cast<float>(c.d_state),
                                        static_cast<float>(c.expand), static_cast<float>(c.d_conv),
                                        static_cast<float>(c.classes)}));
  tensors.push_back(to_named("meta.modalities",
                             std::vector<float>{modalities.text ? 1.0f : 0.0f,
                                                modalities.face ? 1.0f : 0.0f,
                                                modalities.speaker ? 1.0f : 0.0f}));
  write_adp1(tensors, path);
}

LoadedFusion load_fusion(const std::filesystem::path& path) {
  const std::vector<NamedTensor> tensors = read_adp1(path);
  const Tensor<float> meta = load_tensor(tensors, "meta.config", {5});
  const Tensor<float> mods = load_tensor(tensors, "meta.modalities", {3});
  MambaConfig c;
  c.d_model = static_cast<std::size_t>(meta[0]);
  c.d_state = static_cast<std::size_t>(meta[1]);
  c.expand = static_cast<std::size_t>(meta[2]);
  c.d_conv = static_cast<std::size_t>(meta[3]);
  c.classes = static_cast<std::size_t>(meta[4]);
  try {
    c.validate();
  } catch (const Error&) {
    throw Error(ErrorKind::kFormat, path.string() + ": invalid meta.config");
  }
  LoadedFusion out;
  out.params = MambaParams<float>::create(c, 0);
  load_params(tensors, out.params.parameters());
  out.modalities.text = mods[0] != 0.0f;
  out.modalities.face = mods[1] != 0.0f;
  out.modalities.speaker = mods[2] != 0.0f;
  if (out.modalities.d_model() != c.d_model) {
    throw Error(ErrorKind::kFormat, path.string() + ": modalities do not match d_model");
  }
  return out;
}

}  // namespace merc
