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

#ifndef MERC_QC_H_
#define MERC_QC_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "merc/manifest.h"

namespace merc {

struct QcConfig {
  double cos_threshold = 0.25;
  double lev_threshold = 0.3;
  double face_threshold = 0.3;
  // Tried in order when the nominal frame has no matching face.
  std::vector<double> offsets = {0.0, -0.25, 0.25, -0.5, 0.5};
  // Speaker labels naming a group (compared case-insensitively).
  std::set<std::string> multi_speaker_blocklist = {"all", "guys", "everyone", "everybody",
                                                   "both"};
  // Substrings marking a joint speaker label ("Phoebe and Rachel").
  std::vector<std::string> conjunction_markers = {" and ", ","};
  // Names that denote one person across dialogues and are never suffixed.
  std::set<std::string> recurring_speakers;

  // Throws a config error when a threshold leaves [0, 1].
  void validate() const;
};

// 1 - d(a', b') / max(|a'|, |b'|) over lowercased code points; both empty -> 1.
double levenshtein_similarity(std::string_view a, std::string_view b);

// Plain edit distance over code points (insert/delete/substitute cost 1).
std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

// Decodes UTF-8 (invalid bytes map to U+FFFD) and lowercases ASCII letters.
std::u32string fold_text(std::string_view text);

// Dimension mismatch -> dimension error; zero-norm input -> degenerate-vector
// error.
double cosine_similarity(std::span<const float> u, std::span<const float> v);

enum class RejectReason {
  kPass,
  kMultiSpeaker,
  kEmptyAsr,
  kLowCosine,
  kLowLevenshtein,
  kNoProfile,
  kNoFace,
  kUnsupportedChannels,
};

inline constexpr std::array<RejectReason, 7> kRejectReasons = {
    RejectReason::kMultiSpeaker,  RejectReason::kEmptyAsr, RejectReason::kLowCosine,
    RejectReason::kLowLevenshtein, RejectReason::kNoProfile, RejectReason::kNoFace,
    RejectReason::kUnsupportedChannels};

const char* to_string(RejectReason reason);

struct AlignmentInput {
  std::string utterance_id;
  std::string original_text;
  std::string asr_text;
  std::span<const float> emb_original;
  std::span<const float> emb_asr;
};

struct AlignmentReport {
  double cosine = 0.0;
  double levenshtein = 0.0;
  bool keep = false;
  RejectReason reason = RejectReason::kPass;
};

// Empty (all-whitespace) ASR text rejects without scoring. Otherwise both
// scores are computed and the first failing check (cosine, then Levenshtein)
// becomes the reason.
AlignmentReport check_alignment(const AlignmentInput& input, const QcConfig& cfg);

inline constexpr std::size_t kMaxProfileSamples = 15;

struct SpeakerProfile {
  std::string speaker_id;
  std::vector<float> mean_embedding;
  int sample_count = 0;
};

// Arithmetic mean of 1..15 samples (not re-normalized).
SpeakerProfile build_speaker_profile(std::span<const std::span<const float>> samples,
                                     const std::string& speaker_id);

struct FaceCandidate {
  double frame_time = 0.0;
  double offset = 0.0;
  std::vector<float> embedding;
};

struct FaceMatch {
  std::size_t index = 0;  // into the candidate list passed in
  double similarity = 0.0;
  double offset = 0.0;
};

// Highest cosine to the profile mean among candidates at or above
// `threshold`; the earliest candidate wins ties. Zero-norm candidates never
// match.
std::optional<FaceMatch> match_face(std::span<const FaceCandidate> candidates,
                                    const SpeakerProfile& profile, double threshold);

// Candidates of one nominal frame, grouped by offset. Offsets are tried in the
// given order and the first successful match is returned.
std::optional<FaceMatch> offset_search(std::span<const FaceCandidate> candidates,
                                       const SpeakerProfile& profile,
                                       std::span<const double> offsets, double threshold);

// 6 channels -> 2; 2 channels -> higher sum of squares (ties to the lower
// index); 1 channel -> 0. Other layouts -> unsupported-layout error.
std::size_t select_audio_channel(std::span<const std::span<const float>> channels);

// Same rule when only the channel count and per-channel energies are known.
// An empty `energies` list for a 2-channel layout selects channel 0.
std::size_t select_audio_channel(int channel_count, std::span<const double> energies);

bool is_multi_speaker(const std::string& speaker, const QcConfig& cfg);

struct DisambiguationResult {
  std::vector<UtteranceRecord> kept;
  std::vector<UtteranceRecord> dropped;  // joint-speaker labels
};

// Drops joint-speaker records; a name used in more than one dialogue becomes
// "{name}_d{dialogue_id}" in each of them.
DisambiguationResult disambiguate_speakers(std::span<const UtteranceRecord> records,
                                           const QcConfig& cfg);

struct SplitCounts {
  std::int64_t original = 0;
  std::int64_t verified = 0;
  std::map<RejectReason, std::int64_t> rejected;

  std::int64_t rejected_total() const;
};

struct QcReport {
  std::map<std::string, SplitCounts> splits;

  SplitCounts totals() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct QcOutcome {
  std::string utterance_id;
  std::string split;
  RejectReason reason = RejectReason::kPass;
  std::optional<AlignmentReport> alignment;
};

struct QcResult {
  std::vector<UtteranceRecord> verified;
  std::vector<QcOutcome> outcomes;  // one per input record, input order
  QcReport report;
};

// Speaker disambiguation -> audio-text alignment -> face validation ->
// channel selection. A record is verified iff it passes every stage; the
// face stage replaces face_frames with the matched faces and the channel
// stage sets audio_channel. Stages whose inputs a record lacks (no asr_text,
// no face_candidates, no channel_count) are skipped for that record.
// Unresolvable references -> manifest error naming the record.
QcResult run_qc(std::span<const UtteranceRecord> records, EmbeddingStore& store,
                const ProfileDatabase& profiles, const QcConfig& cfg);

}  // namespace merc

#endif  // MERC_QC_H_
