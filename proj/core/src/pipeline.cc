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

#include "merc/pipeline.h"

#include "merc/error.h"

namespace merc {

AdapterSource parse_adapter_source(const std::string& name) {
  if (name == "face") return AdapterSource::kFace;
  if (name == "speaker") return AdapterSource::kSpeaker;
  throw Error(ErrorKind::kConfig, "unknown adapter source '" + name + "' (face|speaker)");
}

const char* to_string(AdapterSource source) {
  return source == AdapterSource::kFace ? "face" : "speaker";
}

std::vector<UtteranceRecord> select_split(std::span<const UtteranceRecord> records,
                                          const std::string& split) {
  std::vector<UtteranceRecord> out;
  for (const UtteranceRecord& r : records) {
    if (split.empty() || r.split == split) out.push_back(r);
  }
  return out;
}

namespace {

void append_row(std::vector<float>& values, std::span<const float> row) {
  values.insert(values.end(), row.begin(), row.end());
}

// Rows of `raw` mapped to 128-d by `adapter` when they are 512-d.
Tensor<float> adapt(const Tensor<float>& raw, const AdapterParams<float>* adapter,
                    const char* what) {
  if (raw.cols() == kAdapterHidden2) return raw;
  if (raw.cols() != kAdapterInput) {
    throw Error(ErrorKind::kDimension, std::string(what) + " embeddings must be 128-d or 512-d, got " +
                                           shape_string(raw.shape()));
  }
  if (adapter == nullptr) {
    throw Error(ErrorKind::kConfig,
                std::string(what) + " embeddings are 512-d; a trained adapter is required");
  }
  return extract_adapted(raw, *adapter);
}

}  // namespace

LabeledSet adapter_dataset(std::span<const UtteranceRecord> records, EmbeddingStore& store,
                           AdapterSource source, const EmotionScheme& scheme) {
  std::vector<float> values;
  LabeledSet set;
  for (const UtteranceRecord& r : records) {
    const int label = scheme.require_index(r.emotion);
    if (source == AdapterSource::kFace) {
      for (const FrameRef& f : r.face_frames) {
        const auto row = store.row(f.ref);
        if (row.size() != kAdapterInput) {
          throw Error(ErrorKind::kDimension, "face embedding of '" + r.utterance_id +
                                                 "' is not 512-d");
        }
        append_row(values, row);
        set.y.push_back(label);
      }
    } else if (r.speaker_emb) {
      const auto row = store.row(*r.speaker_emb);
      if (row.size() != kAdapterInput) {
        throw Error(ErrorKind::kDimension, "speaker embedding of '" + r.utterance_id +
                                               "' is not 512-d");
      }
      append_row(values, row);
      set.y.push_back(label);
    }
  }
  if (!set.y.empty()) set.x = Tensor<float>({set.y.size(), kAdapterInput}, std::move(values));
  return set;
}

std::vector<FusedSequence> build_sequences(std::span<const UtteranceRecord> records,
                                           EmbeddingStore& store, const ModalitySet& modalities,
                                           const EmotionScheme& scheme,
                                           const FusionInputs& inputs) {
  std::vector<FusedSequence> out;
  out.reserve(records.size());
  for (const UtteranceRecord& r : records) {
    auto missing = [&](const char* what) {
      return Error(ErrorKind::kInput, "record '" + r.utterance_id + "' has no " + what);
    };
    UtteranceFeatures f;
    if (modalities.text) {
      if (!r.tokens) throw missing("token embeddings");
      f.text_tokens = store.rows(*r.tokens);
    }
    if (modalities.face) {
      if (r.face_frames.empty()) throw missing("face frames");
      std::vector<float> values;
      for (const FrameRef& fr : r.face_frames) append_row(values, store.row(fr.ref));
      const std::size_t dim = values.size() / r.face_frames.size();
      const Tensor<float> raw({r.face_frames.size(), dim}, std::move(values));
      f.face_frames = adapt(raw, inputs.face_adapter, "face");
    }
    if (modalities.speaker) {
      if (!r.speaker_emb) throw missing("speaker embedding");
      const Tensor<float> adapted = adapt(store.rows(*r.speaker_emb), inputs.speaker_adapter, "speaker");
      f.speaker.assign(adapted.row(0).begin(), adapted.row(0).end());
    }
    out.push_back(fuse_utterance(f, modalities, r.utterance_id, scheme.require_index(r.emotion)));
  }
  return out;
}

}  // namespace merc
