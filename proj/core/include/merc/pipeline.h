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

#ifndef MERC_PIPELINE_H_
#define MERC_PIPELINE_H_

#include <span>
#include <string>
#include <vector>

#include "merc/adapter.h"
#include "merc/fusion.h"
#include "merc/labels.h"
#include "merc/manifest.h"

namespace merc {

enum class AdapterSource { kFace, kSpeaker };

// "face" | "speaker"; anything else -> config error.
AdapterSource parse_adapter_source(const std::string& name);
const char* to_string(AdapterSource source);

// Records of `split` (all records when empty).
std::vector<UtteranceRecord> select_split(std::span<const UtteranceRecord> records,
                                          const std::string& split);

// One sample per selected face frame (kFace) or per speaker embedding
// (kSpeaker), labeled with the utterance emotion. Records lacking the
// reference are skipped.
LabeledSet adapter_dataset(std::span<const UtteranceRecord> records, EmbeddingStore& store,
                           AdapterSource source, const EmotionScheme& scheme);

// Adapters applied to raw 512-d face/speaker embeddings before fusion;
// 128-d inputs are used as they are.
struct FusionInputs {
  const AdapterParams<float>* face_adapter = nullptr;
  const AdapterParams<float>* speaker_adapter = nullptr;
};

std::vector<FusedSequence> build_sequences(std::span<const UtteranceRecord> records,
                                           EmbeddingStore& store, const ModalitySet& modalities,
                                           const EmotionScheme& scheme,
                                           const FusionInputs& inputs);

}  // namespace merc

#endif  // MERC_PIPELINE_H_
