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

#ifndef MERC_MANIFEST_H_
#define MERC_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "merc/emb1.h"
#include "merc/labels.h"

namespace merc {

// Rows [row, row + count) of an EMB1 file, path relative to the corpus root.
struct RowRef {
  std::string file;
  std::uint64_t row = 0;
  std::uint64_t count = 1;

  friend bool operator==(const RowRef&, const RowRef&) = default;
};

// One face embedding at a frame time (seconds into the utterance). `offset`
// is the shift applied by the offset search; 0 for the nominal frame.
struct FrameRef {
  double time = 0.0;
  double offset = 0.0;
  RowRef ref;

  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string dialogue_id;
  std::string split;  // train | dev | test
  std::string speaker;
  std::string emotion;  // canonical label of the active scheme
  std::string text;
  std::optional<std::string> asr_text;

  std::optional<RowRef> text_emb;  // sentence embedding of `text`
  std::optional<RowRef> asr_emb;   // sentence embedding of `asr_text`
  std::optional<RowRef> tokens;    // per-token text embeddings (T rows)
  std::optional<RowRef> speaker_emb;
  std::vector<FrameRef> face_frames;  // selected faces, one per frame
  // Detected faces awaiting face-speaker validation. Absent = stage skipped.
  std::optional<std::vector<FrameRef>> face_candidates;

  std::optional<int> channel_count;
  std::vector<double> channel_energies;
  std::optional<int> audio_channel;

  // Fields this version does not interpret; written back unchanged.
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

bool is_valid_split(const std::string& split);

nlohmann::json record_to_json(const UtteranceRecord& record);
// Emotion labels are folded onto `scheme` with map_label.
UtteranceRecord record_from_json(const nlohmann::json& j, const EmotionScheme& scheme);

// JSONL, one record per line. Duplicate ids -> manifest error naming the id;
// unmappable emotion -> label error.
std::vector<UtteranceRecord> parse_manifest(std::istream& in, const EmotionScheme& scheme,
                                            const std::string& source);
std::vector<UtteranceRecord> read_manifest(const std::filesystem::path& path,
                                           const EmotionScheme& scheme);
void write_manifest(std::span<const UtteranceRecord> records, std::ostream& out);
void write_manifest(std::span<const UtteranceRecord> records,
                    const std::filesystem::path& path);

// Lazily loads EMB1 files under a corpus root and resolves row references.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::filesystem::path root) : root_(std::move(root)) {}

  // Registers an in-memory matrix under a relative name (no disk access).
  void put(const std::string& file, EmbeddingMatrix m);

  const EmbeddingMatrix& matrix(const std::string& file);
  std::span<const float> row(const RowRef& ref);
  // All rows of `ref` as a [count, dim] tensor.
  Tensor<float> rows(const RowRef& ref);

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::map<std::string, EmbeddingMatrix, std::less<>> cache_;
};

// Face samples per (disambiguated) speaker id, used to build speaker profiles.
struct ProfileDatabase {
  std::map<std::string, std::vector<RowRef>> speakers;
};

// {"speakers": {"<id>": [{"file": ..., "row": ...}, ...], ...}}
ProfileDatabase read_profiles(const std::filesystem::path& path);
void write_profiles(const ProfileDatabase& db, const std::filesystem::path& path);

}  // namespace merc

#endif  // MERC_MANIFEST_H_
