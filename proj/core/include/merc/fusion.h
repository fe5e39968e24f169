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

#ifndef MERC_FUSION_H_
#define MERC_FUSION_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "merc/labels.h"
#include "merc/mamba.h"
#include "merc/tensor.h"
#include "merc/training.h"

namespace merc {

inline constexpr std::size_t kTextDim = 768;
inline constexpr std::size_t kFaceDim = 128;
inline constexpr std::size_t kSpeakerDim = 128;

// T = text tokens, V = face frames, A = speaker embedding.
struct ModalitySet {
  bool text = false;
  bool face = false;
  bool speaker = false;

  // "T", "V", "A", "T+V", "T+A", "V+A", "T+V+A" (any order, case-insensitive).
  static ModalitySet parse(const std::string& spec);
  std::string to_string() const;
  // 768 + 128 * face + 128 * speaker with text; 256 for V+A; 128 for V or A.
  std::size_t d_model() const;

  friend bool operator==(const ModalitySet&, const ModalitySet&) = default;
};

// Contiguous group sizes matching T tokens to F frames; the first T mod F
// groups take one extra token. T < F -> alignment error.
std::vector<std::size_t> align_tokens_to_frames(std::size_t tokens, std::size_t frames);

struct UtteranceFeatures {
  Tensor<float> text_tokens;   // [T, 768] or empty
  Tensor<float> face_frames;   // [F, 128] or empty
  std::vector<float> speaker;  // 128 values or empty
};

struct FusedSequence {
  std::string utterance_id;
  int label = -1;
  Tensor<float> tokens;            // [T, d_model], right-padded
  std::vector<std::uint8_t> mask;  // 1 for valid rows, a prefix

  std::size_t valid_length() const;
  std::size_t d_model() const { return tokens.cols(); }
};

// Per token t: [text_t | face_{frame(t)} | speaker] for the selected
// modalities. Without text: one token per frame ([face | speaker] for V+A,
// [face] for V) or a single [speaker] token for A. When a text utterance has
// fewer tokens than frames only the first T frames are used.
// Missing modality data -> input error; wrong widths -> dimension error.
FusedSequence fuse_utterance(const UtteranceFeatures& features, const ModalitySet& modalities,
                             std::string utterance_id = {}, int label = -1);

// Zero rows appended up to `length` with mask 0.
FusedSequence pad_sequence(const FusedSequence& seq, std::size_t length);

// Pads the batch to its longest sequence, runs the block on every padded
// sequence and pools over the mask. Mixed widths -> batch error.
template <typename T>
Tensor<T> fusion_forward(std::span<const FusedSequence> batch, const MambaParams<T>& params);

struct FusionTrainConfig {
  double lr = 1e-5;
  double weight_decay = 0.01;
  int batch_size = 32;
  int max_epochs = 200;
  int early_stop_patience = 10;
  double label_smoothing = 0.2;
  // Empty -> the scheme default (MELD weights for meld7, uniform otherwise).
  std::vector<double> class_weights;
  std::size_t d_state = 64;
  std::size_t expand = 2;
  std::size_t d_conv = 4;
  std::uint64_t seed = 0;

  void validate() const;
  std::vector<double> resolved_weights(const EmotionScheme& scheme) const;
};

struct FusionTrainResult {
  MambaParams<float> params;  // best validation weighted-F1 checkpoint
  TrainHistory history;
};

// AdamW on weighted label-smoothed cross-entropy, early stopping on
// validation weighted F1. Training batches are packed without padding.
FusionTrainResult train_fusion(std::span<const FusedSequence> train,
                               std::span<const FusedSequence> val, const EmotionScheme& scheme,
                               const FusionTrainConfig& cfg);

// Predicted class per sequence, evaluated in batches of `batch_size`.
std::vector<int> predict_fusion(std::span<const FusedSequence> data,
                                const MambaParams<float>& params, std::size_t batch_size = 32);
EvalMetrics evaluate_fusion(std::span<const FusedSequence> data, const MambaParams<float>& params,
                            std::size_t batch_size = 32);

// ADP1 container with the block parameters plus "meta.config"
// (d_model, d_state, expand, d_conv, classes) and "meta.modalities".
void save_fusion(const MambaParams<float>& params, const ModalitySet& modalities,
                 const std::filesystem::path& path);

struct LoadedFusion {
  MambaParams<float> params;
  ModalitySet modalities;
};
LoadedFusion load_fusion(const std::filesystem::path& path);

}  // namespace merc

#endif  // MERC_FUSION_H_
