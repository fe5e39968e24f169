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

#include "merc/synth.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "merc/error.h"
#include "merc/labels.h"
#include "merc/qc.h"
#include "merc/rng.h"

namespace merc {

void SynthConfig::validate() const {
  if (!(separation > 0.0) || !(noise > 0.0)) {
    throw Error(ErrorKind::kConfig, "synth separation and noise must be positive");
  }
  if (train_per_class == 0 || dev_per_class == 0) {
    throw Error(ErrorKind::kConfig, "synth train and dev counts must be >= 1");
  }
  if (min_tokens == 0 || min_tokens > max_tokens) {
    throw Error(ErrorKind::kConfig, "synth token range must satisfy 1 <= min <= max");
  }
  if (min_frames == 0 || min_frames > max_frames) {
    throw Error(ErrorKind::kConfig, "synth frame range must satisfy 1 <= min <= max");
  }
  if (speakers == 0 || utterances_per_dialogue == 0) {
    throw Error(ErrorKind::kConfig, "synth speaker pool and dialogue size must be >= 1");
  }
  if (profile_samples == 0 || profile_samples > kMaxProfileSamples) {
    throw Error(ErrorKind::kConfig, "synth profile_samples must lie in [1, 15]");
  }
  if (!(identity_scale > 0.0)) throw Error(ErrorKind::kConfig, "identity_scale must be positive");
  if (!(shifted_face_fraction >= 0.0 && shifted_face_fraction <= 1.0)) {
    throw Error(ErrorKind::kConfig, "shifted_face_fraction must lie in [0, 1]");
  }
  if (text_dim == 0 || face_dim == 0 || speaker_dim == 0) {
    throw Error(ErrorKind::kConfig, "synth dimensions must be positive");
  }
  EmotionScheme::by_name(scheme);
  const std::size_t k = EmotionScheme::by_name(scheme).size();
  if (text_dim < k || face_dim < k || speaker_dim < k) {
    throw Error(ErrorKind::kConfig, "synth dimensions must be at least the class count");
  }
}

namespace {

constexpr const char* kFileTokens = "text_tokens.emb1";
constexpr const char* kFileText = "text_sentence.emb1";
constexpr const char* kFileAsr = "asr_sentence.emb1";
constexpr const char* kFileFaces = "faces.emb1";
constexpr const char* kFileSpeaker = "speaker.emb1";
constexpr const char* kFileProfiles = "profile_faces.emb1";

constexpr std::size_t kBackgroundPeople = 8;
constexpr double kFrameStep = 0.5;
constexpr double kShiftedOffset = -0.25;

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "i",      "you",   "we",     "they",   "really", "never",  "always", "think",
      "know",   "want",  "going",  "to",     "the",    "coffee", "apartment", "tonight",
      "maybe",  "just",  "about",  "that",   "this",   "what",   "with",   "her",
      "him",    "okay",  "right",  "now",    "again",  "believe", "cannot", "said",
      "would",  "could", "should", "there",  "here",   "today",  "tomorrow", "party",
      "dinner", "work",  "money",  "friend", "seriously", "wait", "listen", "come",
      "on",     "oh",    "well",   "so",     "because", "sorry", "great",  "happened"};
  return words;
}

std::vector<double> normal_vector(Rng& rng, std::size_t dim, double sd) {
  std::vector<double> v(dim);
  for (double& x : v) x = sd * rng.normal();
  return v;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

// K orthogonal directions of norm separation / sqrt(2): pairwise distance
// exactly `separation`.
std::vector<std::vector<double>> class_means(Rng& rng, std::size_t classes, std::size_t dim,
                                             double separation) {
  std::vector<std::vector<double>> basis;
  while (basis.size() < classes) {
    std::vector<double> v = normal_vector(rng, dim, 1.0);
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
    }
    const double n = norm(v);
    if (n < 1e-6) continue;
    for (double& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  const double scale = separation / std::sqrt(2.0);
  for (auto& b : basis) {
    for (double& x : b) x *= scale;
  }
  return basis;
}

std::vector<double> identity_vector(Rng& rng, std::size_t dim, double scale, double noise) {
  std::vector<double> v = normal_vector(rng, dim, 1.0);
  const double target = scale * noise * std::sqrt(static_cast<double>(dim));
  const double n = norm(v);
  for (double& x : v) x *= target / n;
  return v;
}

// center (may be empty) + optional class mean + N(0, noise^2), appended as a row.
std::uint64_t emit_row(EmbeddingMatrix& m, Rng& rng, const std::vector<double>* center,
                       const std::vector<double>* mean, double noise) {
  std::vector<float> row(m.dim);
  for (std::size_t i = 0; i < m.dim; ++i) {
    double v = noise * rng.normal();
    if (center) v += (*center)[i];
    if (mean) v += (*mean)[i];
    row[i] = static_cast<float>(v);
  }
  const std::uint64_t index = m.count();
  m.append(row);
  return index;
}

std::string make_sentence(Rng& rng) {
  const auto& words = vocabulary();
  std::string s;
  while (s.size() < 32) {
    if (!s.empty()) s += ' ';
    s += words[rng.below(words.size())];
  }
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

// What a transcriber returns for a clean utterance: same words, no casing or
// final punctuation.
std::string transcribe(const std::string& text) {
  std::string out;
  for (const char ch : text) {
    if (ch == '.') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

std::string speaker_name(std::size_t p) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02zu", p);
  return buf;
}

}  // namespace

SynthCorpus synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const EmotionScheme& scheme = EmotionScheme::by_name(cfg.scheme);
  const std::size_t classes = scheme.size();
  Rng rng(cfg.seed);

  const auto text_means = class_means(rng, classes, cfg.text_dim, cfg.separation);
  const auto face_means = class_means(rng, classes, cfg.face_dim, cfg.separation);
  const auto voice_means = class_means(rng, classes, cfg.speaker_dim, cfg.separation);
  std::vector<std::vector<double>> face_ids;
  std::vector<std::vector<double>> voice_ids;
  for (std::size_t p = 0; p < cfg.speakers; ++p) {
    face_ids.push_back(identity_vector(rng, cfg.face_dim, cfg.identity_scale, cfg.noise));
    voice_ids.push_back(identity_vector(rng, cfg.speaker_dim, cfg.identity_scale, cfg.noise));
  }
  std::vector<std::vector<double>> background;
  for (std::size_t b = 0; b < kBackgroundPeople; ++b) {
    background.push_back(identity_vector(rng, cfg.face_dim, cfg.identity_scale, cfg.noise));
  }

  SynthCorpus corpus;
  EmbeddingMatrix tokens(static_cast<std::uint32_t>(cfg.text_dim), {});
  EmbeddingMatrix text_emb(static_cast<std::uint32_t>(cfg.text_dim), {});
  EmbeddingMatrix asr_emb(static_cast<std::uint32_t>(cfg.text_dim), {});
  EmbeddingMatrix faces(static_cast<std::uint32_t>(cfg.face_dim), {});
  EmbeddingMatrix voices(static_cast<std::uint32_t>(cfg.speaker_dim), {});
  EmbeddingMatrix profile_faces(static_cast<std::uint32_t>(cfg.face_dim), {});

  // Person index per record, for profile construction.
  std::vector<std::size_t> person;
  std::size_t dialogue_counter = 0;
  const std::pair<const char*, std::size_t> splits[] = {
      {"train", cfg.train_per_class}, {"dev", cfg.dev_per_class}, {"test", cfg.test_per_class}};
  for (const auto& [split, per_class] : splits) {
    std::vector<int> labels;
    for (std::size_t k = 0; k < classes; ++k) labels.insert(labels.end(), per_class, static_cast<int>(k));
    rng.shuffle(std::span<int>(labels));

    for (std::size_t start = 0; start < labels.size(); start += cfg.utterances_per_dialogue) {
      const std::string dialogue = std::to_string(dialogue_counter++);
      const std::size_t first = rng.below(cfg.speakers);
      std::size_t second = first;
      if (cfg.speakers > 1) {
        second = rng.below(cfg.speakers - 1);
        if (second >= first) ++second;
      }
      const std::size_t end = std::min(labels.size(), start + cfg.utterances_per_dialogue);
      for (std::size_t i = start; i < end; ++i) {
        const int k = labels[i];
        const std::size_t p = rng.below(2) == 0 ? first : second;
        UtteranceRecord r;
        char id[16];
        std::snprintf(id, sizeof(id), "u%05zu", corpus.records.size());
        r.utterance_id = id;
        r.dialogue_id = dialogue;
        r.split = split;
        r.speaker = speaker_name(p);
        r.emotion = scheme.label(k);
        r.text = make_sentence(rng);
        r.asr_text = transcribe(r.text);

        const auto* tmean = cfg.text_informative ? &text_means[k] : nullptr;
        const auto* fmean = cfg.face_informative ? &face_means[k] : nullptr;
        const auto* vmean = cfg.speaker_informative ? &voice_means[k] : nullptr;

        const std::uint64_t row = emit_row(text_emb, rng, nullptr, tmean, cfg.noise);
        std::vector<double> center(text_emb.row(row).begin(), text_emb.row(row).end());
        r.text_emb = RowRef{kFileText, row, 1};
        r.asr_emb = RowRef{kFileAsr, emit_row(asr_emb, rng, &center, nullptr, 0.25 * cfg.noise), 1};

        const std::size_t t_count =
            cfg.min_tokens + rng.below(cfg.max_tokens - cfg.min_tokens + 1);
        const std::uint64_t first_token = tokens.count();
        for (std::size_t t = 0; t < t_count; ++t) emit_row(tokens, rng, nullptr, tmean, cfg.noise);
        r.tokens = RowRef{kFileTokens, first_token, t_count};

        r.speaker_emb = RowRef{kFileSpeaker, emit_row(voices, rng, &voice_ids[p], vmean, cfg.noise), 1};

        const std::size_t f_count =
            cfg.min_frames + rng.below(cfg.max_frames - cfg.min_frames + 1);
        std::vector<FrameRef> candidates;
        for (std::size_t f = 0; f < f_count; ++f) {
          const double time = kFrameStep * static_cast<double>(f);
          const bool shifted = rng.uniform() < cfg.shifted_face_fraction;
          const std::uint64_t true_row = emit_row(faces, rng, &face_ids[p], fmean, cfg.noise);
          const std::uint64_t other_row =
              emit_row(faces, rng, &background[rng.below(kBackgroundPeople)], nullptr, cfg.noise);
          const double offset = shifted ? kShiftedOffset : 0.0;
          candidates.push_back(FrameRef{time, 0.0, RowRef{kFileFaces, other_row, 1}});
          candidates.push_back(FrameRef{time, offset, RowRef{kFileFaces, true_row, 1}});
          r.face_frames.push_back(FrameRef{time, offset, RowRef{kFileFaces, true_row, 1}});
        }
        r.face_candidates = std::move(candidates);

        const int layouts[] = {1, 2, 6};
        r.channel_count = layouts[rng.below(3)];
        if (*r.channel_count == 2) r.channel_energies = {rng.uniform(), rng.uniform()};

        corpus.records.push_back(std::move(r));
        person.push_back(p);
      }
    }
  }

  // Planted faults, each on a distinct record.
  std::vector<std::size_t> order(corpus.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::size_t next = 0;
  std::set<std::size_t> no_profile;
  auto plant = [&](std::size_t count, RejectReason reason, auto&& mutate) {
    for (std::size_t i = 0; i < count; ++i) {
      if (next >= order.size()) {
        throw Error(ErrorKind::kConfig, "synth: more planted faults than records");
      }
      const std::size_t idx = order[next++];
      mutate(idx, corpus.records[idx]);
      corpus.planted[to_string(reason)].push_back(corpus.records[idx].utterance_id);
    }
  };
  plant(cfg.plant_multi_speaker, RejectReason::kMultiSpeaker,
        [&](std::size_t, UtteranceRecord& r) {
          r.speaker = rng.below(2) == 0 ? "All" : speaker_name(0) + " and " + speaker_name(1);
        });
  plant(cfg.plant_empty_asr, RejectReason::kEmptyAsr,
        [&](std::size_t, UtteranceRecord& r) { r.asr_text = ""; });
  plant(cfg.plant_low_cosine, RejectReason::kLowCosine, [&](std::size_t, UtteranceRecord& r) {
    const std::vector<double> v = normal_vector(rng, cfg.text_dim, cfg.noise);
    float* dst = asr_emb.values.data() + r.asr_emb->row * asr_emb.dim;
    for (std::size_t i = 0; i < cfg.text_dim; ++i) dst[i] = static_cast<float>(v[i]);
  });
  plant(cfg.plant_low_levenshtein, RejectReason::kLowLevenshtein,
        [&](std::size_t, UtteranceRecord& r) { r.asr_text = "Yeah!"; });
  plant(cfg.plant_no_profile, RejectReason::kNoProfile, [&](std::size_t idx, UtteranceRecord& r) {
    r.speaker = "guest" + std::to_string(idx);
    no_profile.insert(idx);
  });
  plant(cfg.plant_no_face, RejectReason::kNoFace, [&](std::size_t, UtteranceRecord& r) {
    std::vector<FrameRef> candidates;
    for (const FrameRef& f : r.face_frames) {
      for (const double offset : {0.0, kShiftedOffset}) {
        const std::uint64_t row =
            emit_row(faces, rng, &background[rng.below(kBackgroundPeople)], nullptr, cfg.noise);
        candidates.push_back(FrameRef{f.time, offset, RowRef{kFileFaces, row, 1}});
      }
    }
    r.face_candidates = std::move(candidates);
  });
  plant(cfg.plant_unsupported_channels, RejectReason::kUnsupportedChannels,
        [&](std::size_t, UtteranceRecord& r) {
          r.channel_count = 4;
          r.channel_energies.clear();
        });

  // Profiles are keyed by the speaker ids QC will see after disambiguation.
  const QcConfig qc_defaults;
  std::vector<UtteranceRecord> profiled;
  std::vector<std::size_t> profiled_person;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (is_multi_speaker(corpus.records[i].speaker, qc_defaults)) continue;
    profiled.push_back(corpus.records[i]);
    profiled_person.push_back(no_profile.contains(i) ? cfg.speakers : person[i]);
  }
  const DisambiguationResult dis = disambiguate_speakers(profiled, qc_defaults);
  for (std::size_t i = 0; i < dis.kept.size(); ++i) {
    const std::size_t p = profiled_person[i];
    if (p == cfg.speakers) continue;
    auto& refs = corpus.profiles.speakers[dis.kept[i].speaker];
    if (!refs.empty()) continue;
    for (std::size_t s = 0; s < cfg.profile_samples; ++s) {
      refs.push_back(RowRef{kFileProfiles, emit_row(profile_faces, rng, &face_ids[p], nullptr, cfg.noise), 1});
    }
  }

  corpus.files[kFileTokens] = std::move(tokens);
  corpus.files[kFileText] = std::move(text_emb);
  corpus.files[kFileAsr] = std::move(asr_emb);
  corpus.files[kFileFaces] = std::move(faces);
  corpus.files[kFileSpeaker] = std::move(voices);
  corpus.files[kFileProfiles] = std::move(profile_faces);
  return corpus;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_manifest(corpus.records, dir / "manifest.jsonl");
  write_profiles(corpus.profiles, dir / "profiles.json");
  for (const auto& [name, m] : corpus.files) write_emb1(m, dir / name);
}

void register_corpus(const SynthCorpus& corpus, EmbeddingStore& store) {
  for (const auto& [name, m] : corpus.files) store.put(name, m);
}

}  // namespace merc
